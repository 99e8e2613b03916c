//! End-to-end studies: perturb an input measure, push it through the solver,
//! and compare measured distances and risk gaps with their bounds.
//!
//! Every study is deterministic in `(config, seed)`; per-sample work runs in
//! parallel and is reduced in index order.

mod config;
mod coupled;
mod discrete;
mod perturbation;
mod report;
mod truncation;

pub use config::{
    BoundedSupport, FieldModelSpec, GridSpec, Perturbation, QoiConfig, StudyConfig, StudyKind, Target, MIN_SAMPLES,
};
pub use discrete::random_weights;
pub use perturbation::run_perturbation_study;
pub use report::{Check, CheckStatus, Label, Quantity, SampleRow, StudyReport};
pub use truncation::{default_levels, run_truncation_study};

use crate::error::Result;

/// Perturbation study plus exhaustive discrete instances of the
/// measure-sensitivity bound.
pub fn run_risk_sensitivity_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let mut report = run_perturbation_study(cfg)?;
    discrete::discrete_risk_checks(cfg, &mut report)?;
    Ok(report)
}

/// Contraction and product inequalities of total variation on random finite
/// instances.
pub fn run_tv_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut report = StudyReport::new(cfg.clone());
    discrete::discrete_tv_checks(cfg, &mut report)?;
    Ok(report)
}

/// Runs the study named by `cfg.study`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    match cfg.study {
        StudyKind::Perturbation => run_perturbation_study(cfg),
        StudyKind::Truncation => run_truncation_study(cfg),
        StudyKind::Risk => run_risk_sensitivity_study(cfg),
        StudyKind::Tv => run_tv_study(cfg),
    }
}
