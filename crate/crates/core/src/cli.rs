//! The `uqsens` command-line front end.
//!
//! Every verb reads one JSON config (`--config`), writes its outputs and a
//! copy of the resolved config (`config.resolved.json`) into `--out`, and
//! exits with 0 on success, 2 when a study reports a bound violation and 1 on
//! usage or config errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{run_study, GridSpec, StudyConfig};
use crate::grf::{kl_decompose, build_cov_matrix, FieldSampler, GaussianFieldModel, MaternParams, Transform};
use crate::grid::{Field, Grid};
use crate::metrics::wasserstein_1d;
use crate::pde::{h1_seminorm, l2_norm, linf_norm, solve, stability_bound};
use crate::risk::{risk_rows, sensitivity_bound, write_risk_csv, RiskSpec};

/// Environment variable read for the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "UQSENS_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "uqsens", version, about = "Sensitivity of uncertainty propagation to the input measure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "uqsens-out")]
    pub out: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to UQSENS_THREADS, then to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw Gaussian or lognormal Matérn fields.
    FieldSample(Common),
    /// Karhunen–Loève decomposition of a Matérn covariance.
    Kl(Common),
    /// Solve the diffusion problem for one coefficient and source.
    Solve(Common),
    /// 1D Wasserstein distance between two scalar sample files.
    Distance(Common),
    /// Risk functionals of a scalar sample file, with an optional sensitivity bound.
    Risk(Common),
    /// Run a perturbation, truncation, risk or TV study.
    Study(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::FieldSample(c) | Command::Kl(c) | Command::Solve(c) | Command::Distance(c) | Command::Risk(c) | Command::Study(c) => c,
        }
    }
}

/// Reads and deserializes a JSON config, reporting the failing field path
/// together with line and column.
pub fn parse_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        Error::Config(format!("{}: at `{at}`: {inner}", path.display()))
    })
}

/// Loads a study config with the seed precedence CLI > config > 0.
pub fn load_study_config(path: &Path, seed: Option<u64>) -> Result<StudyConfig> {
    let mut cfg: StudyConfig = parse_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSampleConfig {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub mean: f64,
    pub matern: MaternParams,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlConfig {
    #[serde(default)]
    pub grid: GridSpec,
    pub matern: MaternParams,
}

/// A field given as a constant or as a field CSV on the config grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Constant(f64),
    Csv(PathBuf),
}

impl FieldSource {
    fn load(&self, grid: &Grid, base: &Path) -> Result<Field> {
        match self {
            FieldSource::Constant(v) => Ok(Field::constant(*grid, *v)),
            FieldSource::Csv(p) => crate::io::read_field_csv(std::fs::File::open(base.join(p))?, grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub grid: GridSpec,
    pub a: FieldSource,
    pub f: FieldSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub p_samples: PathBuf,
    pub q_samples: PathBuf,
    #[serde(default = "two")]
    pub p: f64,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityRequest {
    pub holder_constant: f64,
    #[serde(default = "one_f64")]
    pub beta: f64,
    #[serde(default = "two")]
    pub p: f64,
    pub distance: f64,
}

fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub samples: PathBuf,
    pub risks: Vec<RiskSpec>,
    /// Conjugate order used for the support-norm column.
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default)]
    pub sensitivity: Option<SensitivityRequest>,
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn echo<T: Serialize>(out: &Path, cfg: &T) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut s = serde_json::to_string_pretty(cfg)?;
    s.push('\n');
    std::fs::write(out.join("config.resolved.json"), s)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn configure_threads(flag: Option<usize>) {
    let n = flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n.filter(|n| *n > 0) {
        // only the first configuration in a process takes effect
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already configured");
        }
    }
}

/// Runs a parsed command; returns the exit code.
pub fn dispatch(cli: &Cli) -> Result<i32> {
    let common = cli.command.common();
    configure_threads(common.threads);
    let out = &common.out;
    let base = base_dir(&common.config);
    match &cli.command {
        Command::FieldSample(c) => {
            let mut cfg: FieldSampleConfig = parse_config(&c.config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let grid = cfg.grid.build()?;
            let model = GaussianFieldModel::new(Field::constant(grid, cfg.mean), cfg.matern, cfg.transform)?;
            let sampler = FieldSampler::new(&model)?;
            echo(out, &cfg)?;
            for (i, f) in sampler.draws(cfg.seed, cfg.n).iter().enumerate() {
                crate::io::write_field_csv(f, std::fs::File::create(out.join(format!("field_{i:05}.csv")))?)?;
            }
            println!("wrote {} fields to {}", cfg.n, out.display());
        }
        Command::Kl(c) => {
            let cfg: KlConfig = parse_config(&c.config)?;
            let grid = cfg.grid.build()?;
            cfg.matern.validate()?;
            let basis = kl_decompose(&build_cov_matrix(&cfg.matern, &grid), &grid.weights())?;
            echo(out, &cfg)?;
            crate::io::write_kl_csv(&basis, &grid, std::fs::File::create(out.join("kl.csv"))?)?;
            let mut w = csv::Writer::from_path(out.join("spectrum.csv"))?;
            w.write_record(["k", "eigenvalue", "tail_sum", "linf_tail_sum"])?;
            for k in 0..basis.len() {
                w.write_record([
                    k.to_string(),
                    format!("{:e}", basis.eigenvalues()[k]),
                    format!("{:e}", basis.tail_sum(k)),
                    format!("{:e}", basis.linf_tail_sum(k)),
                ])?;
            }
            w.flush()?;
            println!("trace {:e}, rank {}", basis.trace(), basis.rank());
        }
        Command::Solve(c) => {
            let cfg: SolveConfig = parse_config(&c.config)?;
            let grid = cfg.grid.build()?;
            let a = cfg.a.load(&grid, &base)?;
            let f = cfg.f.load(&grid, &base)?;
            let u = solve(&a, &f)?;
            echo(out, &cfg)?;
            crate::io::write_field_csv(&u, std::fs::File::create(out.join("solution.csv"))?)?;
            let summary = serde_json::json!({
                "version": crate::VERSION,
                "h1_seminorm": h1_seminorm(&u),
                "l2_norm": l2_norm(&u),
                "linf_norm": linf_norm(&u),
                "stability_bound": stability_bound(&a, &f)?,
            });
            write_json(&out.join("solve.json"), &summary)?;
            println!("|u|_H1 = {:e}", h1_seminorm(&u));
        }
        Command::Distance(c) => {
            let cfg: DistanceConfig = parse_config(&c.config)?;
            let xs = crate::io::read_samples_csv(std::fs::File::open(base.join(&cfg.p_samples))?)?;
            let ys = crate::io::read_samples_csv(std::fs::File::open(base.join(&cfg.q_samples))?)?;
            let d = wasserstein_1d(&xs, &ys, cfg.p)?;
            echo(out, &cfg)?;
            write_json(&out.join("distance.json"), &serde_json::json!({ "version": crate::VERSION, "p": cfg.p, "distance": d }))?;
            println!("{d}");
        }
        Command::Risk(c) => {
            let cfg: RiskConfig = parse_config(&c.config)?;
            for r in &cfg.risks {
                r.validate().map_err(|e| Error::Config(format!("risk {}: {e}", r.label())))?;
            }
            let xs = crate::io::read_samples_csv(std::fs::File::open(base.join(&cfg.samples))?)?;
            let m = crate::metrics::EmpiricalMeasure::uniform(xs)?;
            let rows = risk_rows(&cfg.risks, &m, cfg.q)?;
            // sensitivity requests fail before anything is written
            let bounds = match &cfg.sensitivity {
                Some(s) => Some(
                    cfg.risks
                        .iter()
                        .map(|r| sensitivity_bound(r, s.holder_constant, s.beta, s.p, s.distance))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            echo(out, &cfg)?;
            write_risk_csv(&rows, std::fs::File::create(out.join("risk.csv"))?)?;
            if let Some(b) = bounds {
                write_json(&out.join("sensitivity.json"), &b)?;
            }
            for r in &rows {
                println!("{}\t{}", r.spec, r.value);
            }
        }
        Command::Study(c) => {
            let cfg = load_study_config(&c.config, c.seed)?;
            echo(out, &cfg)?;
            let report = run_study(&cfg)?;
            report.write_to(out)?;
            for chk in &report.checks {
                println!("{:?}\t{}\t{:e} <= {:e} + {:e}", chk.status, chk.name, chk.lhs, chk.rhs, chk.slack);
            }
            if !report.pass {
                eprintln!("bound violated: {}", report.failures().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", "));
                return Ok(EXIT_VIOLATION);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn config_errors_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.json", "{\"study\": \"perturbation\",\n \"n\": \"many\"}");
        let e = load_study_config(&p, None).unwrap_err().to_string();
        assert!(e.contains("at `n`") && e.contains("line 2"), "{e}");
        let p = write(dir.path(), "c.json", r#"{"study":"risk","risk":{"kind":"avar","alpha":1.0}}"#);
        assert!(load_study_config(&p, None).unwrap_err().to_string().contains("α must lie in [0,1)"));
    }

    #[test]
    fn seed_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.json", r#"{"study":"tv","seed":5}"#);
        assert_eq!(load_study_config(&p, None).unwrap().seed, 5);
        assert_eq!(load_study_config(&p, Some(9)).unwrap().seed, 9);
        let p = write(dir.path(), "d.json", r#"{"study":"tv"}"#);
        assert_eq!(load_study_config(&p, None).unwrap().seed, 0);
    }

    #[test]
    fn unknown_verb_is_usage_error() {
        assert_eq!(run(["uqsens", "frobnicate"]), EXIT_ERROR);
        assert_eq!(run(["uqsens", "study"]), EXIT_ERROR);
    }
}
