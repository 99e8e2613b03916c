use crate::error::{invalid, Result};
use crate::metrics::EmpiricalMeasure;

use super::StepDensity;

/// Tolerance used when comparing cumulative weights with a level `alpha`.
const CDF_TOL: f64 = 1e-12;

/// Atoms sorted ascending with their weights and cumulative weights; the
/// last cumulative weight is pinned to 1.
pub(crate) struct Sorted {
    pub xs: Vec<f64>,
    pub ws: Vec<f64>,
    pub cdf: Vec<f64>,
}

pub(crate) fn sorted(m: &EmpiricalMeasure<f64>) -> Sorted {
    let mut pairs: Vec<(f64, f64)> = m.atoms().iter().copied().zip(m.weights().iter().copied()).filter(|(_, w)| *w > 0.0).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = pairs
        .iter()
        .map(|(_, w)| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Sorted { xs: pairs.iter().map(|p| p.0).collect(), ws: pairs.iter().map(|p| p.1).collect(), cdf }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return invalid(format!("α must lie in [0,1), got {alpha}"));
    }
    Ok(())
}

pub fn expectation(m: &EmpiricalMeasure<f64>) -> f64 {
    m.expect(|x| *x)
}

/// Largest atom carrying positive weight.
pub fn ess_sup(m: &EmpiricalMeasure<f64>) -> f64 {
    m.atoms().iter().zip(m.weights()).filter(|(_, w)| **w > 0.0).map(|(x, _)| *x).fold(f64::NEG_INFINITY, f64::max)
}

/// Left-continuous quantile `inf { x : P(X <= x) >= alpha }`; at `alpha = 0`
/// this is the smallest atom.
pub fn var(m: &EmpiricalMeasure<f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = sorted(m);
    Ok(s.cdf.iter().position(|&c| c >= alpha - CDF_TOL).map(|k| s.xs[k]).unwrap_or(*s.xs.last().expect("nonempty")))
}

/// `(1 / (1 - alpha)) int_alpha^1 F^{-1}(u) du`, integrated exactly over the
/// quantile steps.
pub fn avar(m: &EmpiricalMeasure<f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = sorted(m);
    let mut prev = 0.0f64;
    let mut total = 0.0;
    for (x, &c) in s.xs.iter().zip(&s.cdf) {
        let overlap = c - prev.max(alpha);
        if overlap > 0.0 {
            total += overlap * x;
        }
        prev = c;
    }
    Ok(total / (1.0 - alpha))
}

/// `min_q { q + E[(X - q)_+] / (1 - alpha) }`, minimised exactly over the atoms.
pub fn avar_dual(m: &EmpiricalMeasure<f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = sorted(m);
    let n = s.xs.len();
    // suffix sums of w and w x above index k
    let mut above_w = vec![0.0; n + 1];
    let mut above_wx = vec![0.0; n + 1];
    for k in (0..n).rev() {
        above_w[k] = above_w[k + 1] + s.ws[k];
        above_wx[k] = above_wx[k + 1] + s.ws[k] * s.xs[k];
    }
    let mut best = f64::INFINITY;
    for k in 0..n {
        let q = s.xs[k];
        let excess = above_wx[k + 1] - q * above_w[k + 1];
        best = best.min(q + excess / (1.0 - alpha));
    }
    Ok(best)
}

/// `int_0^1 sigma(u) F^{-1}(u) du` over the common refinement of density
/// steps and quantile steps.
pub fn spectral(m: &EmpiricalMeasure<f64>, density: &StepDensity) -> Result<f64> {
    density.validate()?;
    let s = sorted(m);
    let e = density.edges();
    let v = density.values();
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < s.xs.len() && j < v.len() {
        let next = s.cdf[i].min(e[j + 1]);
        total += (next - prev) * v[j] * s.xs[i];
        prev = next;
        if s.cdf[i] <= next {
            i += 1;
        }
        if e[j + 1] <= next {
            j += 1;
        }
    }
    Ok(total)
}

/// `log E[exp(t X)]`, shifted by the largest atom for stability.
pub fn log_mean_exp(m: &EmpiricalMeasure<f64>, t: f64) -> f64 {
    let top = m.atoms().iter().zip(m.weights()).filter(|(_, w)| **w > 0.0).map(|(x, _)| t * x).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = m.atoms().iter().zip(m.weights()).filter(|(_, w)| **w > 0.0).map(|(x, w)| w * (t * x - top).exp()).sum();
    top + s.ln()
}

const EVAR_T_MIN: f64 = 1e-6;
const EVAR_T_MAX: f64 = 1e12;
const EVAR_REL_TOL: f64 = 1e-10;

/// `inf_{t > 0} (1/t) (log(1/(1-alpha)) + log E[exp(t X)])`.
///
/// `X` is first standardised to `(X - E X) / (max - min)` so that the search
/// is invariant under shifts and scalings. Golden-section search on `log t`
/// over `[1e-6, 1e12]` then runs on the standardised variable. The objective
/// tends to the mean as `t -> 0` and to the largest atom as `t -> inf`; the
/// result is clipped to `[mean, max]` so that unattained infima at either
/// end are reported exactly.
pub fn evar(m: &EmpiricalMeasure<f64>, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let lo_val = expectation(m);
    let hi_val = ess_sup(m);
    if alpha == 0.0 || hi_val - lo_val <= 0.0 {
        return Ok(lo_val.min(hi_val));
    }
    let ess_inf = m.atoms().iter().zip(m.weights()).filter(|(_, w)| **w > 0.0).map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let spread = hi_val - ess_inf;
    let z = m.pushforward(|x| (x - lo_val) / spread);
    let c = -(1.0 - alpha).ln();
    let objective = |s: f64| {
        let t = s.exp();
        (c + log_mean_exp(&z, t)) / t
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (EVAR_T_MIN.ln(), EVAR_T_MAX.ln());
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut best = f1.min(f2).min(objective(a)).min(objective(b));
    while b - a > EVAR_REL_TOL * (1.0 + a.abs().max(b.abs())) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = objective(x1);
            best = best.min(f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = objective(x2);
            best = best.min(f2);
        }
    }
    Ok((lo_val + spread * best).clamp(lo_val, hi_val))
}

/// `E[X] + beta (E[(X - E X)_+^p])^{1/p}`.
pub fn semideviation(m: &EmpiricalMeasure<f64>, beta: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return invalid(format!("β must lie in [0,1], got {beta}"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("semideviation order must be a finite p >= 1, got {p}"));
    }
    let mean = expectation(m);
    let upper = m.expect(|x| (x - mean).max(0.0).powf(p));
    Ok(mean + beta * upper.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(xs: &[f64]) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure::uniform(xs.to_vec()).unwrap()
    }

    #[test]
    fn var_examples() {
        let m = uni(&[4.0, 2.0, 1.0, 3.0]);
        assert_eq!(var(&m, 0.0).unwrap(), 1.0);
        assert_eq!(var(&m, 0.5).unwrap(), 2.0);
        assert_eq!(var(&m, 0.51).unwrap(), 3.0);
        for a in [0.0, 0.3, 0.99] {
            assert_eq!(var(&uni(&[7.5]), a).unwrap(), 7.5);
        }
        assert!(var(&m, 1.0).unwrap_err().to_string().contains("α must lie in [0,1)"));
    }

    #[test]
    fn avar_examples() {
        let m = uni(&[1.0, 2.0, 3.0, 4.0]);
        assert!((avar(&m, 0.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((avar(&m, 0.5).unwrap() - 3.5).abs() < 1e-15);
        assert!((avar(&m, 0.75).unwrap() - 4.0).abs() < 1e-15);
        for a in [0.0, 0.1, 0.5, 0.75, 0.9] {
            assert!((avar(&m, a).unwrap() - avar_dual(&m, a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_examples() {
        let m = uni(&[0.0, 1.0]);
        assert!((spectral(&m, &StepDensity::constant()).unwrap() - 0.5).abs() < 1e-15);
        // sigma(u) = 2u is not a step function; its exact value against the
        // step quantile 1_[1/2, 1] is 3/4, reached by refining the density
        let n = 1 << 12;
        let edges: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let values: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64 / n as f64).collect();
        let d = StepDensity::new(edges, values).unwrap();
        assert!((spectral(&m, &d).unwrap() - 0.75).abs() < 1e-12);
        let m = uni(&[3.0, -1.0, 0.5, 2.0, 8.0]);
        for a in [0.0, 0.2, 0.5, 0.9] {
            let s = spectral(&m, &StepDensity::avar(a).unwrap()).unwrap();
            assert!((s - avar(&m, a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn evar_examples() {
        assert_eq!(evar(&uni(&[2.5]), 0.9).unwrap(), 2.5);
        let m = uni(&[0.0, 1.0, 5.0, -2.0]);
        let e = evar(&m, 0.7).unwrap();
        assert!(e >= avar(&m, 0.7).unwrap() - 1e-12 && e <= 5.0);
        assert!((evar(&m, 0.0).unwrap() - 1.0).abs() < 1e-15);
        // a top atom heavier than 1 - alpha pins EVaR at the maximum
        let m = EmpiricalMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(evar(&m, 0.6).unwrap(), 1.0);
    }

    #[test]
    fn evar_ignores_zero_weight_atoms() {
        let with = EmpiricalMeasure::new(vec![0.0, 1.0, 50.0], vec![0.5, 0.5, 0.0]).unwrap();
        let without = uni(&[0.0, 1.0]);
        assert_eq!(evar(&with, 0.3).unwrap(), evar(&without, 0.3).unwrap());
    }

    #[test]
    fn evar_is_scale_equivariant_with_near_ties() {
        let xs = [-0.5011160601676388, 0.23259238295785362, 0.23258916085728815];
        let ws = vec![0.3009556888180713, 0.41829921576547996, 0.28074509541644876];
        let lam = 4.122908660437149;
        let a = 0.5428893565943078;
        let e1 = evar(&EmpiricalMeasure::new(xs.to_vec(), ws.clone()).unwrap(), a).unwrap();
        let e2 = evar(&EmpiricalMeasure::new(xs.iter().map(|x| lam * x).collect(), ws).unwrap(), a).unwrap();
        assert!((e2 - lam * e1).abs() < 1e-12);
    }

    #[test]
    fn semideviation_examples() {
        let m = uni(&[-1.0, 1.0]);
        assert_eq!(semideviation(&m, 0.0, 2.0).unwrap(), 0.0);
        assert!((semideviation(&m, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(semideviation(&uni(&[3.0]), 1.0, 3.0).unwrap(), 3.0);
        assert!(semideviation(&m, 1.5, 1.0).is_err());
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let m = uni(&[1000.0, 999.0]);
        let v = log_mean_exp(&m, 1.0);
        assert!((v - (1000.0 + ((1.0 + (-1f64).exp()) / 2.0).ln())).abs() < 1e-12);
    }
}
