//! Mean shift of a bounded log-coefficient: coupled output distances against
//! the local Lipschitz bound, QoI distances and the AVaR gap.

use uqsens::experiments::{run_perturbation_study, BoundedSupport, Perturbation, StudyConfig, StudyKind};

fn main() -> uqsens::Result<()> {
    let mut cfg = StudyConfig::with_defaults(StudyKind::Perturbation);
    cfg.perturbation = Perturbation::MeanShift { delta: 0.1 };
    cfg.bounded_support = Some(BoundedSupport { radius: 1.0, clip: 4.0 });
    cfg.n = 500;
    let report = run_perturbation_study(&cfg)?;
    for q in &report.quantities {
        println!("{:<28} {:>12.5e}  {:?}", q.name, q.value, q.label);
    }
    for c in &report.checks {
        println!("{:<28} {:?}  {:.3e} <= {:.3e}", c.name, c.status, c.lhs, c.rhs + c.slack);
    }
    println!("rejection rate {:.3}", report.rejection_rate.unwrap_or(0.0));
    Ok(())
}
