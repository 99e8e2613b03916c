use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;

/// Half-integer Matérn covariance parameters, smoothness `nu = k + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    /// Marginal standard deviation.
    pub sigma: f64,
    /// Correlation length.
    pub rho: f64,
    /// Smoothness index, `nu = k + 1/2`.
    pub k: u32,
}

impl MaternParams {
    pub fn new(sigma: f64, rho: f64, k: u32) -> Result<Self> {
        let p = Self { sigma, rho, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return invalid(format!("Matérn sigma must be positive, got {}", self.sigma));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return invalid(format!("Matérn rho must be positive, got {}", self.rho));
        }
        if self.k > 20 {
            return invalid(format!("Matérn k = {} is beyond the supported range 0..=20", self.k));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn nu(&self) -> f64 {
        self.k as f64 + 0.5
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Matérn covariance at distance `d >= 0` for `nu = k + 1/2`:
///
/// `sigma^2 k!/(2k)! sum_{i=0}^k (k+i)!/(i!(k-i)!) (2 s d/rho)^(k-i) exp(-s d/rho)`,
/// with `s = sqrt(2k + 1)`.
pub fn matern_cov(params: &MaternParams, d: f64) -> f64 {
    let k = params.k;
    let s = (2.0 * k as f64 + 1.0).sqrt();
    let z = s * d.abs() / params.rho;
    let lead = factorial(k) / factorial(2 * k);
    let poly: f64 = (0..=k)
        .map(|i| factorial(k + i) / (factorial(i) * factorial(k - i)) * (2.0 * z).powi((k - i) as i32))
        .sum();
    params.variance() * lead * poly * (-z).exp()
}

/// Covariance matrix `C[i][j] = c(|x_i - x_j|)` over arbitrary points.
pub fn cov_matrix_from_points(params: &MaternParams, points: &[[f64; 2]]) -> DMatrix<f64> {
    let n = points.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = params.variance();
        for j in 0..i {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let v = matern_cov(params, (dx * dx + dy * dy).sqrt());
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Covariance matrix over the interior nodes of `grid`.
pub fn build_cov_matrix(params: &MaternParams, grid: &Grid) -> DMatrix<f64> {
    cov_matrix_from_points(params, &grid.points())
}
