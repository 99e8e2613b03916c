use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grf::MaternParams;
use crate::grid::{Field, Grid};
use crate::pde::QoiSpec;
use crate::risk::RiskSpec;

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Perturbation,
    Truncation,
    Risk,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "one_f64")]
    pub length: f64,
    #[serde(default = "default_nodes")]
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { dim: 1, length: 1.0, n: default_nodes() }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.length, self.n)
    }
}

/// Constant mean plus an optional Matérn Gaussian fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldModelSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub matern: Option<MaternParams>,
}

impl Default for FieldModelSpec {
    fn default() -> Self {
        Self { mean: 0.0, matern: None }
    }
}

fn default_log_a() -> FieldModelSpec {
    FieldModelSpec { mean: 0.0, matern: Some(MaternParams { sigma: 0.3, rho: 0.3, k: 0 }) }
}

fn default_source() -> FieldModelSpec {
    FieldModelSpec { mean: 0.5, matern: None }
}

/// How the perturbed measure `Q` is obtained from `P`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    #[default]
    None,
    /// Mean `m -> m + delta`.
    MeanShift { delta: f64 },
    /// Standard deviation `sigma -> kappa sigma`.
    StdScale { kappa: f64 },
    /// Correlation length `rho -> kappa rho`.
    CorrLength { kappa: f64 },
    /// Keep the leading `k` Karhunen–Loève modes.
    Truncation { k: usize },
}

/// Which input the perturbation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    LogA,
    Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QoiConfig {
    PointEval { x0: Vec<f64> },
    SubdomainMean { lo: Vec<f64>, hi: Vec<f64> },
    /// Squared `L^2` distance to the constant `u0`.
    L2Dist {
        #[serde(default)]
        u0: f64,
    },
    /// Squared `H^1` seminorm distance to the constant `u0`.
    H1Dist {
        #[serde(default)]
        u0: f64,
    },
}

impl Default for QoiConfig {
    fn default() -> Self {
        QoiConfig::SubdomainMean { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }
    }
}

fn point(v: &[f64], grid: &Grid, what: &str) -> Result<[f64; 2]> {
    if v.len() != grid.dim() {
        return Err(Error::Config(format!("{what} has {} coordinates on a {}D grid", v.len(), grid.dim())));
    }
    Ok([v[0], v.get(1).copied().unwrap_or(0.0)])
}

impl QoiConfig {
    pub fn build(&self, grid: &Grid) -> Result<QoiSpec> {
        match self {
            QoiConfig::PointEval { x0 } => QoiSpec::point_eval(grid, point(x0, grid, "x0")?),
            QoiConfig::SubdomainMean { lo, hi } => {
                let clip = |v: &[f64]| -> Vec<f64> { v.iter().take(grid.dim()).map(|c| c * grid.length()).collect() };
                // the default box is given in unit coordinates
                let (lo, hi) = if *self == QoiConfig::default() { (clip(lo), clip(hi)) } else { (lo.clone(), hi.clone()) };
                QoiSpec::subdomain_mean(grid, point(&lo, grid, "lo")?, point(&hi, grid, "hi")?)
            }
            QoiConfig::L2Dist { u0 } => Ok(QoiSpec::L2Dist { u0: Field::constant(*grid, *u0) }),
            QoiConfig::H1Dist { u0 } => Ok(QoiSpec::H1Dist { u0: Field::constant(*grid, *u0) }),
        }
    }
}

/// Restricts both measures to `||log a||_inf <= radius`, `||f||_{L^2} <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundedSupport {
    pub radius: f64,
    /// Innovations are clipped to `[-clip, clip]` before rejection.
    #[serde(default = "default_clip")]
    pub clip: f64,
}

/// Full study configuration; every field except `study` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_log_a")]
    pub log_a: FieldModelSpec,
    #[serde(default = "default_source")]
    pub source: FieldModelSpec,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub qoi: QoiConfig,
    #[serde(default = "default_risk")]
    pub risk: RiskSpec,
    #[serde(default = "default_order")]
    pub p: f64,
    #[serde(default = "default_samples")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bounded_support: Option<BoundedSupport>,
    /// Truncation levels for the truncation study; all levels when absent.
    #[serde(default)]
    pub truncation_levels: Option<Vec<usize>>,
    /// Random discrete instances for the risk and TV studies.
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Largest support size of the discrete instances.
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
}

fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    31
}
fn default_clip() -> f64 {
    4.0
}
fn default_risk() -> RiskSpec {
    RiskSpec::Avar { alpha: 0.9 }
}
fn default_order() -> f64 {
    2.0
}
fn default_samples() -> usize {
    1000
}
fn default_instances() -> usize {
    200
}
fn default_max_atoms() -> usize {
    4
}

/// Smallest accepted Monte Carlo sample count.
pub const MIN_SAMPLES: usize = 100;

impl StudyConfig {
    /// A config of the given kind with every default filled in.
    pub fn with_defaults(study: StudyKind) -> Self {
        serde_json::from_value(serde_json::json!({ "study": study })).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let grid = self.grid.build().map_err(|e| Error::Config(e.to_string()))?;
        if self.n < MIN_SAMPLES {
            return cfg(format!("n must be at least {MIN_SAMPLES}, got {}", self.n));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return cfg(format!("order p must be a finite number >= 1, got {}", self.p));
        }
        for (name, m) in [("log_a", &self.log_a), ("source", &self.source)] {
            if !m.mean.is_finite() {
                return cfg(format!("{name}.mean must be finite"));
            }
            if let Some(mp) = m.matern {
                mp.validate().map_err(|e| Error::Config(format!("{name}.matern: {e}")))?;
            }
        }
        self.risk.validate().map_err(|e| Error::Config(format!("risk: {e}")))?;
        self.qoi.build(&grid).map_err(|e| Error::Config(format!("qoi: {e}")))?;

        let target = self.target_model();
        match self.perturbation {
            Perturbation::None => {}
            Perturbation::MeanShift { delta } => {
                if !delta.is_finite() {
                    return cfg("mean_shift.delta must be finite".into());
                }
            }
            Perturbation::StdScale { kappa } | Perturbation::CorrLength { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return cfg(format!("perturbation factor kappa must be positive, got {kappa}"));
                }
                if target.matern.is_none() {
                    return cfg("std_scale and corr_length need a random (matern) target model".into());
                }
            }
            Perturbation::Truncation { k } => {
                if target.matern.is_none() {
                    return cfg("truncation needs a random (matern) target model".into());
                }
                if k > grid.len() {
                    return cfg(format!("truncation level {k} exceeds the {} grid nodes", grid.len()));
                }
            }
        }
        if let Some(b) = self.bounded_support {
            if !(b.radius > 0.0 && b.radius.is_finite()) || !(b.clip > 0.0) {
                return cfg("bounded_support needs radius > 0 and clip > 0".into());
            }
        }
        if let Some(levels) = &self.truncation_levels {
            if let Some(k) = levels.iter().find(|&&k| k > grid.len()) {
                return cfg(format!("truncation level {k} exceeds the {} grid nodes", grid.len()));
            }
        }
        if self.study == StudyKind::Truncation && self.bounded_support.is_some() {
            return cfg("the truncation study compares Gaussian models and does not take bounded_support".into());
        }
        if self.study == StudyKind::Truncation && target.matern.is_none() {
            return cfg("the truncation study needs a random (matern) target model".into());
        }
        if matches!(self.study, StudyKind::Risk | StudyKind::Tv) && (self.instances == 0 || !(1..=8).contains(&self.max_atoms)) {
            return cfg("discrete instances need instances >= 1 and 1 <= max_atoms <= 8".into());
        }
        Ok(())
    }

    pub fn target_model(&self) -> &FieldModelSpec {
        match self.target {
            Target::LogA => &self.log_a,
            Target::Source => &self.source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: StudyConfig = serde_json::from_str(r#"{"study":"perturbation"}"#).unwrap();
        assert_eq!((c.p, c.n, c.seed), (2.0, 1000, 0));
        c.validate().unwrap();
        assert_eq!(c, StudyConfig::with_defaults(StudyKind::Perturbation));
    }

    #[test]
    fn unknown_family_lists_valid_ones() {
        let e = serde_json::from_str::<StudyConfig>(r#"{"study":"perturbation","perturbation":{"family":"warp"}}"#).unwrap_err();
        let msg = e.to_string();
        for f in ["none", "mean_shift", "std_scale", "corr_length", "truncation"] {
            assert!(msg.contains(f), "{msg}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = StudyConfig::with_defaults(StudyKind::Perturbation);
        c.n = 10;
        assert!(c.validate().is_err());
        let mut c = StudyConfig::with_defaults(StudyKind::Perturbation);
        c.risk = RiskSpec::Avar { alpha: 1.0 };
        assert!(c.validate().unwrap_err().to_string().contains("α must lie in [0,1)"));
        let mut c = StudyConfig::with_defaults(StudyKind::Perturbation);
        c.perturbation = Perturbation::StdScale { kappa: 1.5 };
        c.target = Target::Source;
        assert!(c.validate().is_err());
    }
}
