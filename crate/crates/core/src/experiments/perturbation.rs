use super::config::StudyConfig;
use super::coupled::{run_coupled, CoupledModel, Evaluated};
use super::report::{Check, Label, SampleRow, StudyReport};
use crate::error::{Error, Result};
use crate::metrics::{coupling_estimate_from, gelbrich_gaussian, wasserstein_1d, CouplingEstimate, EmpiricalMeasure};
use crate::pde::{poincare_constant, solution_lipschitz};
use crate::risk::sensitivity_bound;

/// Node count above which the exact Gaussian input distance is skipped.
const GELBRICH_NODE_LIMIT: usize = 1024;

/// Relative tolerance for checks that hold exactly on the empirical measures.
const NUMERIC_TOL: f64 = 1e-9;

/// `log(mean(exp(xs)))`.
fn log_mean_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + (xs.iter().map(|x| (x - top).exp()).sum::<f64>() / xs.len() as f64).ln()
}

/// Perturbation study: pushes coupled draws from `P` and `Q` through the
/// solver and checks the output distance, the QoI distance and the risk gap
/// against their bounds.
pub fn run_perturbation_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let model = CoupledModel::from_config(cfg)?;
    let grid = model.grid;
    let qoi = cfg.qoi.build(&grid)?;
    let p = cfg.p;
    let (samples, rejected) = run_coupled(&model, &qoi, cfg.n, p)?;

    let mut report = StudyReport::new(cfg.clone());
    if cfg.bounded_support.is_some() {
        report.rejection_rate = Some(rejected as f64 / (rejected + samples.len()) as f64);
    }
    report.samples = samples
        .iter()
        .map(|e| SampleRow {
            sample: e.index,
            qoi_p: e.qoi_p,
            qoi_q: e.qoi_q,
            input_distance: e.input,
            output_distance: e.output,
            level: None,
        })
        .collect();

    let inputs: Vec<f64> = samples.iter().map(|e| e.input).collect();
    let outputs: Vec<f64> = samples.iter().map(|e| e.output).collect();
    let input_p = coupling_estimate_from(&inputs, p)?;
    let output = coupling_estimate_from(&outputs, p)?;
    report.quantity("input_distance", input_p.value, Some(input_p.std_error), Label::UpperBound);
    report.quantity("output_distance", output.value, Some(output.std_error), Label::UpperBound);

    if cfg.bounded_support.is_none() && grid.len() <= GELBRICH_NODE_LIMIT {
        let (sp, sq) = match cfg.target {
            super::config::Target::LogA => (&model.log_a.0, &model.log_a.1),
            super::config::Target::Source => (&model.source.0, &model.source.1),
        };
        let d = gelbrich_gaussian(&sp.weighted_gaussian(&grid)?, &sq.weighted_gaussian(&grid)?)?;
        report.quantity("gaussian_l2_input_distance", d, None, Label::Exact);
    }

    let radius_a = samples.iter().map(|e| e.log_a_sup).fold(0.0, f64::max);
    let radius_f = samples.iter().map(|e| e.source_norm).fold(0.0, f64::max);
    let radius_u = samples.iter().map(|e| e.solution_norm).fold(0.0, f64::max);
    report.quantity("max_log_a_sup", radius_a, None, Label::McEstimate);
    report.quantity("max_source_l2", radius_f, None, Label::McEstimate);
    report.quantity("max_solution_h1", radius_u, None, Label::McEstimate);

    let c = poincare_constant(&grid);
    let disc = 10.0 * grid.h();
    let (solution_bound, solution_slack) = match cfg.bounded_support {
        Some(b) => {
            let cs = solution_lipschitz(c, b.radius);
            report.quantity("solution_lipschitz", cs, None, Label::Exact);
            let bound = cs * input_p.value;
            let slack = 3.0 * output.std_error + disc * input_p.value;
            report.check(Check::new("solution_bounded_support", output.value, bound, slack));
            (bound, slack)
        }
        None => lognormal_bound(&mut report, &samples, c, p, output, disc)?,
    };
    report.quantity("solution_bound", solution_bound, None, Label::UpperBound);

    let qp: Vec<f64> = samples.iter().map(|e| e.qoi_p).collect();
    let qq: Vec<f64> = samples.iter().map(|e| e.qoi_q).collect();
    let w_qoi = wasserstein_1d(&qp, &qq, p)?;
    report.quantity("qoi_wasserstein", w_qoi, None, Label::McEstimate);

    let c_phi = match qoi.lipschitz_constant(&grid, radius_u) {
        Ok(v) => {
            report.quantity("qoi_lipschitz", v, None, Label::Exact);
            let rhs = v * output.value;
            report.check(Check::new("qoi_lipschitz", w_qoi, rhs, disc * rhs + 1e-12));
            Some(v)
        }
        Err(e) => {
            log::info!("no QoI Lipschitz constant: {e}");
            report.check(Check::not_boundable("qoi_lipschitz", w_qoi));
            None
        }
    };

    let mp = EmpiricalMeasure::uniform(qp)?;
    let mq = EmpiricalMeasure::uniform(qq)?;
    let rho_p = cfg.risk.evaluate(&mp)?;
    let rho_q = cfg.risk.evaluate(&mq)?;
    let gap = (rho_p - rho_q).abs();
    report.quantity("risk_p", rho_p, None, Label::McEstimate);
    report.quantity("risk_q", rho_q, None, Label::McEstimate);
    report.quantity("risk_gap", gap, None, Label::McEstimate);
    let tol = NUMERIC_TOL * (1.0 + rho_p.abs() + rho_q.abs());
    match sensitivity_bound(&cfg.risk, 1.0, 1.0, p, w_qoi) {
        Ok(sb) => {
            report.quantity("risk_support_norm", sb.support_norm, None, Label::Exact);
            report.check(Check::new("risk_sensitivity", gap, sb.bound, tol));
            match c_phi {
                Some(cp) => {
                    let k = sb.support_norm * cp;
                    report.check(Check::new("risk_composed", gap, k * solution_bound, k * (solution_slack + disc * solution_bound) + tol));
                }
                None => report.check(Check::not_boundable("risk_composed", gap)),
            }
        }
        Err(Error::UnboundedSupport(msg)) => {
            log::info!("risk gap not boundable: {msg}");
            report.check(Check::not_boundable("risk_sensitivity", gap));
            report.check(Check::not_boundable("risk_composed", gap));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Output bound `2 c C^{1/(2p)} d_{2p}` for unbounded (lognormal) inputs with
/// the moment constant `C` estimated from the same draws.
fn lognormal_bound(
    report: &mut StudyReport,
    samples: &[Evaluated],
    c: f64,
    p: f64,
    output: CouplingEstimate,
    disc: f64,
) -> Result<(f64, f64)> {
    let inputs: Vec<f64> = samples.iter().map(|e| e.input).collect();
    let input_2p = coupling_estimate_from(&inputs, 2.0 * p)?;
    report.quantity("input_distance_2p", input_2p.value, Some(input_2p.std_error), Label::UpperBound);
    let lp: Vec<f64> = samples.iter().map(|e| e.log_moment.0).collect();
    let lq: Vec<f64> = samples.iter().map(|e| e.log_moment.1).collect();
    let log_c = log_mean_exp(&lp).max(log_mean_exp(&lq));
    report.quantity("log_moment_constant", log_c, None, Label::McEstimate);
    let factor = 2.0 * c * (log_c / (2.0 * p)).exp();
    report.quantity("moment_lipschitz_factor", factor, None, Label::McEstimate);
    let bound = factor * input_2p.value;
    let slack = 3.0 * output.std_error + disc * input_2p.value;
    report.check(Check::new("solution_moment_bound", output.value, bound, slack));
    Ok((bound, slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{BoundedSupport, Perturbation, StudyKind};
    use crate::risk::RiskSpec;

    fn small(kind: StudyKind) -> StudyConfig {
        let mut c = StudyConfig::with_defaults(kind);
        c.n = 200;
        c.grid.n = 15;
        c
    }

    #[test]
    fn zero_perturbation_is_trivial() {
        let r = run_perturbation_study(&small(StudyKind::Perturbation)).unwrap();
        assert!(r.pass);
        for q in ["input_distance", "output_distance", "qoi_wasserstein", "risk_gap"] {
            assert_eq!(r.get(q).unwrap().value, 0.0, "{q}");
        }
        assert!(r.get("gaussian_l2_input_distance").unwrap().value < 1e-12);
    }

    #[test]
    fn bounded_mean_shift_passes() {
        let mut c = small(StudyKind::Perturbation);
        c.perturbation = Perturbation::MeanShift { delta: 0.1 };
        c.bounded_support = Some(BoundedSupport { radius: 1.0, clip: 4.0 });
        let r = run_perturbation_study(&c).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        // log a moves by exactly delta on every coupled pair
        assert!((r.get("input_distance").unwrap().value - 0.1).abs() < 1e-12);
        assert!(r.get_check("solution_bounded_support").is_some());
    }

    #[test]
    fn ess_sup_is_not_boundable() {
        let mut c = small(StudyKind::Perturbation);
        c.perturbation = Perturbation::StdScale { kappa: 1.2 };
        c.risk = RiskSpec::EssSup;
        let r = run_perturbation_study(&c).unwrap();
        assert!(r.pass);
        assert_eq!(r.get_check("risk_sensitivity").unwrap().status, crate::experiments::CheckStatus::NotBoundable);
        assert!(r.get_check("solution_moment_bound").is_some());
    }
}
