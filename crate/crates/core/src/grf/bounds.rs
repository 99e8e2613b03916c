//! Numeric companions of the uniform exponential-moment argument for Matérn
//! fields: Dudley's entropy integral under the covering estimate for the
//! dominating metric, Monte Carlo exponential moments of `||g||_inf`, and
//! empirical Borell–TIS tails.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matern::MaternParams;
use super::sampling::{FieldSampler, GaussianFieldModel};
use crate::error::{invalid, Result};
use crate::grid::Grid;

/// The Matérn class `{sigma <= sigma_max, rho >= rho_min, k <= k_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternClass {
    pub sigma_max: f64,
    pub rho_min: f64,
    pub k_max: u32,
}

impl MaternClass {
    pub fn new(sigma_max: f64, rho_min: f64, k_max: u32) -> Result<Self> {
        if !(sigma_max > 0.0) || !(rho_min > 0.0) {
            return invalid("Matérn class needs sigma_max > 0 and rho_min > 0");
        }
        Ok(Self { sigma_max, rho_min, k_max })
    }

    pub fn contains(&self, p: &MaternParams) -> bool {
        p.sigma <= self.sigma_max && p.rho >= self.rho_min && p.k <= self.k_max
    }

    /// Length scale `rho_min / sqrt(2 k_max + 1)` of the dominating exponential kernel.
    pub fn rho_hat(&self) -> f64 {
        self.rho_min / (2.0 * self.k_max as f64 + 1.0).sqrt()
    }

    /// Dominating canonical metric
    /// `d(x, y)^2 = 2 sigma_max^2 (1 - exp(-|x - y| / rho_hat))`.
    pub fn metric(&self, dist: f64) -> f64 {
        (2.0 * self.sigma_max.powi(2) * (1.0 - (-dist / self.rho_hat()).exp())).sqrt()
    }
}

/// `d_hat`-diameter of a domain with Euclidean diameter `diam`.
fn hat_diameter(class: &MaternClass, diam: f64) -> f64 {
    (1.0 - (-diam / class.rho_hat()).exp()).sqrt()
}

/// Upper bound on the covering number `N(D, d, r)` of a domain with
/// Euclidean diameter `diam` in `dim` dimensions, for the dominating metric
/// `d` of `class`. Equals 1 once `r` reaches the `d`-diameter.
pub fn covering_number_bound(class: &MaternClass, dim: usize, diam: f64, r: f64) -> f64 {
    let r_hat = r / (2f64.sqrt() * class.sigma_max);
    if r_hat >= hat_diameter(class, diam) || r_hat >= 1.0 {
        return 1.0;
    }
    if r_hat <= 0.0 {
        return f64::INFINITY;
    }
    let n = dim as f64;
    let euclid_radius = -class.rho_hat() * (-r_hat * r_hat).ln_1p();
    (n.sqrt() * diam / (2.0 * euclid_radius)).ceil().powi(dim as i32)
}

/// Upper incomplete gamma `Gamma(3/2, x)`.
fn upper_gamma_three_halves(x: f64) -> f64 {
    x.sqrt() * (-x).exp() + 0.5 * std::f64::consts::PI.sqrt() * libm::erfc(x.sqrt())
}

/// Exact step count before switching to the asymptotic tail.
const STEPS: usize = 1_000_000;

/// Dudley entropy integral `int_0^inf sqrt(log N(D, d, r)) dr` for the Matérn
/// class, using the cube-covering bound on `N`.
///
/// Dudley's universal constant is not applied: the expected supremum is
/// bounded by an unknown absolute constant times the returned value.
///
/// Under the substitution `d = sqrt(2) sigma_max d_hat` the integrand is a step
/// function of `r`; the first `STEPS` steps are summed exactly and the
/// remainder near `r = 0` is integrated in closed form.
pub fn dudley_entropy_integral(class: &MaternClass, dim: usize, diam: f64) -> f64 {
    let n = dim as f64;
    let c = n.sqrt() * diam / (2.0 * class.rho_hat());
    let r_max = hat_diameter(class, diam);
    // r_j: smallest d_hat-radius at which the cube count drops to j per axis
    let r_at = |j: f64| (-(-c / j).exp_m1()).sqrt();

    let mut total = 0.0;
    // one cube per axis already covers the domain above r_1
    let mut upper = r_max.min(r_at(1.0));
    for j in 2..=STEPS {
        let lo = r_at(j as f64);
        if lo < upper {
            total += (n * (j as f64).ln()).sqrt() * (upper - lo);
            upper = lo;
        }
    }
    // remaining interval (0, upper): log N ~ n log(c / r^2)
    let s0 = (c / (upper * upper)).ln();
    total += n.sqrt() * (2.0 * c).sqrt() * upper_gamma_three_halves(s0 / 2.0);
    2f64.sqrt() * class.sigma_max * total
}

/// Monte Carlo estimate of `E[exp(beta ||g||_inf)]` for a centered field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMomentEstimate {
    /// `log` of the estimate; always finite.
    pub log_mean: f64,
    /// The estimate itself (may overflow to infinity).
    pub mean: f64,
    /// Standard error of the estimate.
    pub std_error: f64,
    pub samples: usize,
}

fn sup_norms(params: &MaternParams, grid: &Grid, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    let sampler = FieldSampler::new(&GaussianFieldModel::centered(*grid, *params)?)?;
    Ok((0..n as u64).into_par_iter().map(|i| sampler.draw(seed, i).linf_norm()).collect())
}

/// Sample mean of `exp(beta max_i |g(x_i)|)` over `n` centered draws,
/// accumulated in log-sum-exp form.
pub fn exp_moment_estimate(params: &MaternParams, grid: &Grid, beta: f64, seed: u64, n: usize) -> Result<ExpMomentEstimate> {
    if !(beta > 0.0) {
        return invalid(format!("exponent beta must be positive, got {beta}"));
    }
    let sups = sup_norms(params, grid, seed, n)?;
    let logs: Vec<f64> = sups.iter().map(|s| beta * s).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let m = scaled.iter().sum::<f64>() / n as f64;
    let log_mean = top + m.ln();
    let se_scaled = crate::stats::std_error(&scaled);
    Ok(ExpMomentEstimate { log_mean, mean: log_mean.exp(), std_error: se_scaled * top.exp(), samples: n })
}

/// Empirical two-sided tail of `||g||_inf` around its mean, paired with the
/// Borell–TIS bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BorellTisCheck {
    pub threshold: f64,
    pub fraction: f64,
    pub std_error: f64,
    /// `2 exp(-r^2 / (2 sigma^2))`.
    pub bound: f64,
    pub mean_sup: f64,
    pub samples: usize,
}

impl BorellTisCheck {
    /// Whether the fraction stays within `k` standard errors of the bound.
    pub fn holds(&self, k: f64) -> bool {
        self.fraction <= self.bound + k * self.std_error
    }
}

pub fn borell_tis_tail_check(params: &MaternParams, grid: &Grid, seed: u64, n: usize, r: f64) -> Result<BorellTisCheck> {
    if !(r >= 0.0) {
        return invalid(format!("threshold must be nonnegative, got {r}"));
    }
    let sups = sup_norms(params, grid, seed, n)?;
    let mean_sup = crate::stats::mean(&sups);
    let hits = sups.iter().filter(|&&s| (s - mean_sup).abs() >= r).count();
    let fraction = hits as f64 / n as f64;
    // binomial standard error, floored at one hit so an empty tail is not exact
    let p = fraction.max(1.0 / n as f64);
    let std_error = (p * (1.0 - p) / n as f64).sqrt();
    let bound = 2.0 * (-r * r / (2.0 * params.variance())).exp();
    Ok(BorellTisCheck { threshold: r, fraction, std_error, bound, mean_sup, samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_in_sigma_max() {
        let a = dudley_entropy_integral(&MaternClass::new(1.0, 1.0, 0).unwrap(), 1, 1.0);
        let b = dudley_entropy_integral(&MaternClass::new(2.0, 1.0, 0).unwrap(), 1, 1.0);
        assert!(a > 0.0 && a.is_finite());
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dudley_matches_direct_quadrature() {
        let class = MaternClass::new(1.0, 0.5, 2).unwrap();
        let r_max = 2f64.sqrt();
        let steps = 200_000;
        let dt = 60.0 / steps as f64;
        let direct: f64 = (0..steps)
            .map(|i| {
                let r = r_max * (-(i as f64 + 0.5) * dt).exp();
                covering_number_bound(&class, 1, 1.0, r).ln().sqrt() * r * dt
            })
            .sum();
        assert!((dudley_entropy_integral(&class, 1, 1.0) - direct).abs() < 1e-3);
    }

    #[test]
    fn covering_number_is_finite_at_tiny_radii() {
        let class = MaternClass::new(1.0, 0.5, 2).unwrap();
        let n = covering_number_bound(&class, 2, 2f64.sqrt(), 1e-20);
        assert!(n.is_finite() && n > 1e30);
    }

    #[test]
    fn covering_number_is_one_beyond_diameter() {
        let class = MaternClass::new(1.0, 0.5, 2).unwrap();
        let diam_d = class.metric(1.0);
        assert_eq!(covering_number_bound(&class, 1, 1.0, diam_d), 1.0);
        assert_eq!(covering_number_bound(&class, 1, 1.0, 2.0 * diam_d), 1.0);
        assert!(covering_number_bound(&class, 1, 1.0, 0.5 * diam_d) > 1.0);
        // monotone in r
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let v = covering_number_bound(&class, 2, 2f64.sqrt(), i as f64 * 0.02);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn metric_dominates_class_members() {
        let class = MaternClass::new(1.0, 0.5, 2).unwrap();
        for k in 0..=2 {
            for &(s, rho) in &[(1.0, 0.5), (0.7, 0.9), (1.0, 3.0)] {
                let p = MaternParams::new(s, rho, k).unwrap();
                for i in 0..50 {
                    let d = i as f64 * 0.03;
                    let canon = 2.0 * (p.variance() - crate::grf::matern_cov(&p, d));
                    assert!(canon <= class.metric(d).powi(2) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn tiny_beta_and_tiny_sigma_give_unit_moment() {
        let g = Grid::unit_interval(16).unwrap();
        let e = exp_moment_estimate(&MaternParams::new(1.0, 0.5, 0).unwrap(), &g, 1e-12, 0, 500).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-9);
        let e = exp_moment_estimate(&MaternParams::new(1e-12, 0.5, 0).unwrap(), &g, 1.0, 0, 500).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn huge_beta_does_not_overflow_in_log_form() {
        let g = Grid::unit_interval(8).unwrap();
        let e = exp_moment_estimate(&MaternParams::new(1.0, 0.5, 0).unwrap(), &g, 1e4, 0, 100).unwrap();
        assert!(e.log_mean.is_finite());
    }

    #[test]
    fn borell_tis_trivial_thresholds() {
        let g = Grid::unit_interval(16).unwrap();
        let p = MaternParams::new(1.0, 0.5, 0).unwrap();
        let c = borell_tis_tail_check(&p, &g, 0, 1000, 0.0).unwrap();
        assert_eq!(c.bound, 2.0);
        assert!(c.holds(0.0));
        let c = borell_tis_tail_check(&p, &g, 0, 10_000, 20.0).unwrap();
        assert_eq!(c.fraction, 0.0);
    }
}
