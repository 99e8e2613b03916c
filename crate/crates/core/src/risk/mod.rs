//! Law-invariant risk functionals on weighted scalar samples, bounds on their
//! support sets, and the sensitivity of risk to the underlying measure.

mod functionals;
mod sensitivity;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::EmpiricalMeasure;

pub use functionals::{avar, avar_dual, ess_sup, evar, expectation, log_mean_exp, semideviation, spectral, var};
pub use sensitivity::{
    avar_on_plan, product_risk_discrete, sensitivity_bound, support_norm_bound, ProductRisk, SensitivityBound,
};

/// Tolerance on the unit mass of a spectral density.
pub const DENSITY_TOL: f64 = 1e-10;

/// Nonnegative step function on `[0, 1]` with unit integral:
/// `sigma(u) = values[j]` for `u` in `[edges[j], edges[j + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDensity {
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl StepDensity {
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let d = Self { edges, values };
        d.validate()?;
        Ok(d)
    }

    /// `sigma = 1`: the expectation.
    pub fn constant() -> Self {
        Self { edges: vec![0.0, 1.0], values: vec![1.0] }
    }

    /// `sigma = 1_[alpha, 1] / (1 - alpha)`: AVaR at level `alpha`.
    pub fn avar(alpha: f64) -> Result<Self> {
        functionals::check_alpha(alpha)?;
        if alpha == 0.0 {
            return Ok(Self::constant());
        }
        Self::new(vec![0.0, alpha, 1.0], vec![0.0, 1.0 / (1.0 - alpha)])
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.edges;
        if e.len() < 2 || self.values.len() + 1 != e.len() {
            return invalid("spectral density needs n + 1 edges for n values");
        }
        if e[0] != 0.0 || e[e.len() - 1] != 1.0 || e.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("spectral density edges must increase strictly from 0 to 1");
        }
        if self.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return invalid("spectral density must be finite and nonnegative");
        }
        let mass = self.integral(|v| v);
        if (mass - 1.0).abs() > DENSITY_TOL {
            return invalid(format!("spectral density integrates to {mass}, not 1"));
        }
        Ok(())
    }

    fn integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.edges.windows(2).zip(&self.values).map(|(w, &v)| (w[1] - w[0]) * g(v)).sum()
    }

    /// `||sigma||_{L^q[0,1]}`; `q = inf` gives the largest step.
    pub fn norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.values.iter().copied().fold(0.0, f64::max);
        }
        self.integral(|v| v.powf(q)).powf(1.0 / q)
    }
}

/// Tagged description of a risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiskSpec {
    Expectation,
    EssSup,
    Var { alpha: f64 },
    Avar { alpha: f64 },
    Evar { alpha: f64 },
    Spectral { density: StepDensity },
    Semideviation { beta: f64, p: f64 },
}

impl RiskSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RiskSpec::Expectation | RiskSpec::EssSup => Ok(()),
            RiskSpec::Var { alpha } | RiskSpec::Avar { alpha } | RiskSpec::Evar { alpha } => functionals::check_alpha(*alpha),
            RiskSpec::Spectral { density } => density.validate(),
            RiskSpec::Semideviation { beta, p } => {
                if !(0.0..=1.0).contains(beta) {
                    return invalid(format!("β must lie in [0,1], got {beta}"));
                }
                if !(*p >= 1.0 && p.is_finite()) {
                    return invalid(format!("semideviation order must be a finite p >= 1, got {p}"));
                }
                Ok(())
            }
        }
    }

    /// `rho(X)` for `X` distributed as `m`.
    pub fn evaluate(&self, m: &EmpiricalMeasure<f64>) -> Result<f64> {
        match self {
            RiskSpec::Expectation => Ok(expectation(m)),
            RiskSpec::EssSup => Ok(ess_sup(m)),
            RiskSpec::Var { alpha } => var(m, *alpha),
            RiskSpec::Avar { alpha } => avar(m, *alpha),
            RiskSpec::Evar { alpha } => evar(m, *alpha),
            RiskSpec::Spectral { density } => spectral(m, density),
            RiskSpec::Semideviation { beta, p } => semideviation(m, *beta, *p),
        }
    }

    /// Dual representation where one is computed independently (AVaR only).
    pub fn evaluate_dual(&self, m: &EmpiricalMeasure<f64>) -> Result<Option<f64>> {
        match self {
            RiskSpec::Avar { alpha } => avar_dual(m, *alpha).map(Some),
            _ => Ok(None),
        }
    }

    /// Short label such as `avar(0.9)`.
    pub fn label(&self) -> String {
        match self {
            RiskSpec::Expectation => "expectation".into(),
            RiskSpec::EssSup => "ess_sup".into(),
            RiskSpec::Var { alpha } => format!("var({alpha})"),
            RiskSpec::Avar { alpha } => format!("avar({alpha})"),
            RiskSpec::Evar { alpha } => format!("evar({alpha})"),
            RiskSpec::Spectral { density } => format!("spectral({} steps)", density.values().len()),
            RiskSpec::Semideviation { beta, p } => format!("semideviation({beta},{p})"),
        }
    }
}

/// One row of a risk report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub spec: String,
    pub value: f64,
    pub dual: Option<f64>,
    /// `None` when the support set is unbounded for this order.
    pub support_norm: Option<f64>,
}

/// Evaluates each spec on `m` with its support-norm bound at conjugate order `q`.
pub fn risk_rows(specs: &[RiskSpec], m: &EmpiricalMeasure<f64>, q: f64) -> Result<Vec<RiskRow>> {
    specs
        .iter()
        .map(|s| {
            Ok(RiskRow {
                spec: s.label(),
                value: s.evaluate(m)?,
                dual: s.evaluate_dual(m)?,
                support_norm: support_norm_bound(s, q).ok(),
            })
        })
        .collect()
}

pub fn write_risk_csv<W: std::io::Write>(rows: &[RiskRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
