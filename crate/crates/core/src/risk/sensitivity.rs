use nalgebra::DMatrix;
use serde::Serialize;

use super::functionals::{avar, check_alpha};
use super::RiskSpec;
use crate::error::{invalid, Error, Result};
use crate::metrics::{CouplingPlan, EmpiricalMeasure};

/// Bound on `sup_{Z in A} E[Z^q]^{1/q}` over the support set `A` of `spec`.
///
/// `q = inf` is accepted and gives the bound on `sup |Z|`.
pub fn support_norm_bound(spec: &RiskSpec, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return invalid(format!("conjugate order must satisfy q >= 1, got {q}"));
    }
    spec.validate()?;
    let unbounded = |why: &str| Err(Error::UnboundedSupport(format!("{} at q = {q}: {why}", spec.label())));
    match spec {
        RiskSpec::Expectation => Ok(1.0),
        RiskSpec::EssSup => unbounded("the support set contains every probability density"),
        RiskSpec::Var { .. } => unbounded("value-at-risk is not coherent and has no support set"),
        RiskSpec::Avar { alpha } => {
            let base = 1.0 / (1.0 - alpha);
            Ok(if q.is_infinite() { base } else { base.powf(1.0 - 1.0 / q) })
        }
        RiskSpec::Spectral { density } => Ok(density.norm(q)),
        RiskSpec::Evar { alpha } => {
            if *alpha == 0.0 {
                return Ok(1.0);
            }
            if q.is_infinite() {
                return unbounded("entropic densities are not essentially bounded");
            }
            Ok(1f64.max((q - 1.0) / (1.0 / (1.0 - alpha)).ln()))
        }
        RiskSpec::Semideviation { beta, p } => {
            // Z = 1 + beta (V - E V) with V >= 0, ||V||_{p/(p-1)} <= 1
            if *p == 1.0 {
                return Ok(1.0 + beta);
            }
            let conj = p / (p - 1.0);
            if q <= conj || *beta == 0.0 {
                Ok(1.0 + 2.0 * beta)
            } else {
                unbounded("q exceeds the conjugate of the semideviation order")
            }
        }
    }
}

/// The measure-sensitivity bound `|rho_P(X) - rho_Q(X)| <= C ||Z||_{p_beta} d_p^beta`
/// for an observable that is `beta`-Hölder with constant `C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityBound {
    pub spec: RiskSpec,
    pub holder_constant: f64,
    pub beta: f64,
    pub p: f64,
    /// `p / (p - beta)`; infinite when `p = beta`.
    pub p_beta: f64,
    pub support_norm: f64,
    pub distance: f64,
    pub bound: f64,
}

/// Composes the sensitivity bound.
///
/// Requires `0 < beta <= 1` and `p >= max(1, beta)`. The boundary case
/// `p = beta` is allowed and uses `p_beta = inf`, i.e. the essential bound
/// on the support densities.
pub fn sensitivity_bound(spec: &RiskSpec, holder_constant: f64, beta: f64, p: f64, distance: f64) -> Result<SensitivityBound> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("Hölder exponent must lie in (0, 1], got {beta}"));
    }
    if !(p >= 1.0 && p >= beta) {
        return invalid(format!("order p = {p} must satisfy p >= 1 and p >= beta"));
    }
    if !(distance >= 0.0) || !(holder_constant >= 0.0) {
        return invalid("distance and Hölder constant must be nonnegative");
    }
    let p_beta = if p == beta { f64::INFINITY } else { p / (p - beta) };
    let support_norm = support_norm_bound(spec, p_beta)?;
    let bound = if distance == 0.0 { 0.0 } else { holder_constant * support_norm * distance.powf(beta) };
    Ok(SensitivityBound { spec: spec.clone(), holder_constant, beta, p, p_beta, support_norm, distance, bound })
}

/// `AVaR_alpha` of the observable `values[(i, j)]` under the plan `pi`:
/// `sup { E_pi[Z Y] : 0 <= Z <= 1/(1-alpha), E_pi[Z] = 1 }`, computed by
/// greedily saturating `Z` on the largest values.
pub fn avar_on_plan(values: &DMatrix<f64>, plan: &CouplingPlan, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let pi = plan.plan();
    if values.shape() != pi.shape() {
        return invalid("observable and plan have different shapes");
    }
    let mut cells: Vec<(f64, f64)> = values.iter().copied().zip(pi.iter().copied()).filter(|(_, m)| *m > 0.0).collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let cap = 1.0 / (1.0 - alpha);
    let mut budget = 1.0 - alpha;
    let mut total = 0.0;
    for (y, m) in cells {
        if budget <= 0.0 {
            break;
        }
        let take = m.min(budget);
        total += take * y;
        budget -= take;
    }
    Ok(total * cap)
}

/// `Risk_pi(X o p_1)` on the product space next to `AVaR_alpha(X)` under the
/// first marginal; the two coincide for every coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductRisk {
    pub on_plan: f64,
    pub on_marginal: f64,
}

/// Largest support accepted by [`product_risk_discrete`].
pub const PRODUCT_LIMIT: usize = 64;

pub fn product_risk_discrete(x: &[f64], plan: &CouplingPlan, alpha: f64) -> Result<ProductRisk> {
    let (m, n) = plan.plan().shape();
    if m > PRODUCT_LIMIT || n > PRODUCT_LIMIT {
        return Err(Error::SizeExceeded { atoms: m.max(n), limit: PRODUCT_LIMIT });
    }
    if x.len() != m {
        return invalid(format!("observable has {} values for {m} atoms", x.len()));
    }
    let lifted = DMatrix::from_fn(m, n, |i, _| x[i]);
    let on_plan = avar_on_plan(&lifted, plan, alpha)?;
    let marginal = EmpiricalMeasure::new(x.to_vec(), plan.row_weights().to_vec())?;
    Ok(ProductRisk { on_plan, on_marginal: avar(&marginal, alpha)? })
}
