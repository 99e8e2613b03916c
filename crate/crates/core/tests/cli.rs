use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_uqsens");

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn uqsens(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("UQSENS_THREADS").output().unwrap()
}

fn run(verb: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![verb, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    uqsens(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ZERO_STUDY: &str = r#"{
  "study": "perturbation",
  "grid": { "dim": 1, "length": 1.0, "n": 15 },
  "perturbation": { "family": "none" },
  "n": 150
}"#;

#[test]
fn zero_perturbation_study_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "study.json", ZERO_STUDY);
    let out = dir.path().join("out");
    let o = run("study", &cfg, &out, &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["config"]["seed"], 3);
    let samples = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(samples.starts_with("sample,qoi_p,qoi_q,input_distance,output_distance,level\n"));
    assert_eq!(samples.lines().count(), 151);

    // the resolved config carries every default and parses back as a study
    let resolved = out.join("config.resolved.json");
    let echoed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&resolved).unwrap()).unwrap();
    assert_eq!(echoed["p"], 2.0);
    assert_eq!(echoed["seed"], 3);
    let again = run("study", &resolved, &dir.path().join("again"), &[]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(out.join("report.json")).unwrap(), fs::read(dir.path().join("again/report.json")).unwrap());
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "study.json",
        r#"{ "study": "perturbation", "grid": { "n": 15 }, "n": 200, "seed": 9,
             "perturbation": { "family": "mean_shift", "delta": 0.2 },
             "bounded_support": { "radius": 1.0 } }"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run("study", &cfg, &a, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run("study", &cfg, &b, &["--threads", "3"]).status.code(), Some(0));
    for f in ["report.json", "samples.csv", "config.resolved.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn distance_of_identical_samples_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "value\n0.5\n-1.25\n3\n");
    let cfg = write(dir.path(), "d.json", r#"{ "p_samples": "x.csv", "q_samples": "x.csv", "p": 1 }"#);
    let o = run("distance", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn distance_between_shifted_samples() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "value\n0\n1\n2\n");
    write(dir.path(), "y.csv", "value\n2.5\n0.5\n1.5\n");
    let cfg = write(dir.path(), "d.json", r#"{ "p_samples": "x.csv", "q_samples": "y.csv" }"#);
    let out = dir.path().join("out");
    let o = run("distance", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.5).abs() < 1e-15);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("distance.json")).unwrap()).unwrap();
    assert_eq!(json["distance"], v);
}

#[test]
fn risk_with_ess_sup_sensitivity_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "value\n1\n2\n3\n4\n");
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{ "samples": "x.csv", "risks": [ { "kind": "ess_sup" } ],
             "sensitivity": { "holder_constant": 1.0, "distance": 0.1 } }"#,
    );
    let out = dir.path().join("out");
    let o = run("risk", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unbounded support"), "{}", stderr(&o));
    assert!(!out.join("risk.csv").exists());
}

#[test]
fn risk_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "x.csv", "value\n1\n2\n3\n4\n");
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{ "samples": "x.csv", "risks": [ { "kind": "expectation" }, { "kind": "avar", "alpha": 0.5 } ],
             "sensitivity": { "holder_constant": 2.0, "p": 1, "distance": 0.1 } }"#,
    );
    let out = dir.path().join("out");
    let o = run("risk", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("risk.csv")).unwrap();
    assert!(csv.starts_with("spec,value,dual,support_norm\n"));
    // conjugate order q = 2 gives (1 / (1 - alpha))^{1/2}
    assert!(csv.contains("avar(0.5),3.5,3.5,1.4142135623730951"), "{csv}");
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sensitivity.json")).unwrap()).unwrap();
    assert!((s[1]["bound"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn solve_field_sample_and_kl() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fields");
    let fcfg = write(dir.path(), "f.json", r#"{ "grid": { "n": 9 }, "matern": { "sigma": 0.5, "rho": 0.2, "k": 1 }, "n": 2, "transform": "exponential" }"#);
    assert_eq!(run("field-sample", &fcfg, &out, &[]).status.code(), Some(0));
    assert!(out.join("field_00001.csv").exists());

    // a coefficient read back from a sampled field, relative to the config file
    fs::copy(out.join("field_00000.csv"), dir.path().join("a.csv")).unwrap();
    let scfg = write(dir.path(), "s.json", r#"{ "grid": { "n": 9 }, "a": { "csv": "a.csv" }, "f": { "constant": 1.0 } }"#);
    let o = run("solve", &scfg, &dir.path().join("solve"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solve/solve.json")).unwrap()).unwrap();
    assert!(summary["h1_seminorm"].as_f64().unwrap() <= summary["stability_bound"].as_f64().unwrap());

    let kcfg = write(dir.path(), "k.json", r#"{ "grid": { "n": 6 }, "matern": { "sigma": 1.0, "rho": 0.3, "k": 0 } }"#);
    assert_eq!(run("kl", &kcfg, &dir.path().join("kl"), &[]).status.code(), Some(0));
    let spectrum = fs::read_to_string(dir.path().join("kl/spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("k,eigenvalue,tail_sum,linf_tail_sum\n"));
    assert_eq!(spectrum.lines().count(), 7);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{ "study": "perturbation", "perturbation": { "family": "warp" } }"#);
    let o = run("study", &bad, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mean_shift"), "{}", stderr(&o));

    let invalid = write(dir.path(), "inv.json", r#"{ "study": "perturbation", "p": 0.5 }"#);
    assert_eq!(run("study", &invalid, &dir.path().join("out"), &[]).status.code(), Some(1));

    let missing = dir.path().join("missing.json");
    assert_eq!(run("study", &missing, &dir.path().join("out"), &[]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(uqsens(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(uqsens(&["study"]).status.code(), Some(1));
    assert_eq!(uqsens(&["--help"]).status.code(), Some(0));
}
