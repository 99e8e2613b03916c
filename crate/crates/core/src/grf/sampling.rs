use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matern::{build_cov_matrix, MaternParams};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::rng::innovations;

/// Pointwise map applied to a Gaussian draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    /// `a = exp(g)`: lognormal field.
    Exponential,
}

impl Transform {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Exponential => v.exp(),
        }
    }
}

/// Gaussian field `N(mean, c)` on a grid, optionally exponentiated.
#[derive(Debug, Clone)]
pub struct GaussianFieldModel {
    pub mean: Field,
    pub cov: MaternParams,
    pub transform: Transform,
}

impl GaussianFieldModel {
    pub fn new(mean: Field, cov: MaternParams, transform: Transform) -> Result<Self> {
        cov.validate()?;
        Ok(Self { mean, cov, transform })
    }

    pub fn centered(grid: Grid, cov: MaternParams) -> Result<Self> {
        Self::new(Field::zeros(grid), cov, Transform::Identity)
    }

    pub fn grid(&self) -> &Grid {
        self.mean.grid()
    }
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-8;

/// Cholesky factor of `c + eps * scale * I` for the smallest
/// `eps in {1e-12, 1e-11, ..., 1e-8}` that succeeds.
///
/// Returns the lower factor and the relative jitter used.
pub fn jittered_cholesky(c: &DMatrix<f64>, scale: f64) -> Result<(DMatrix<f64>, f64)> {
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX * (1.0 + 1e-9) {
        let mut m = c.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += eps * scale;
        }
        if let Some(chol) = m.cholesky() {
            return Ok((chol.l(), eps));
        }
        eps *= 10.0;
    }
    Err(Error::Decomposition(format!(
        "covariance matrix of size {} is not positive definite even after jitter {JITTER_MAX:e}",
        c.nrows()
    )))
}

/// Draws `mean + L xi` with `L` a jittered Cholesky factor of the grid
/// covariance. Holds the factor so repeated draws cost one mat-vec each.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: Grid,
    mean: Vec<f64>,
    factor: DMatrix<f64>,
    transform: Transform,
    jitter: f64,
}

impl FieldSampler {
    pub fn new(model: &GaussianFieldModel) -> Result<Self> {
        let grid = *model.grid();
        let c = build_cov_matrix(&model.cov, &grid);
        let (factor, jitter) = jittered_cholesky(&c, model.cov.variance())?;
        Ok(Self {
            grid,
            mean: model.mean.values().to_vec(),
            factor,
            transform: model.transform,
            jitter,
        })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Gaussian part `mean + L xi` before the transform.
    pub fn gaussian_from(&self, xi: &[f64]) -> Vec<f64> {
        let lx = &self.factor * DVector::from_column_slice(xi);
        self.mean.iter().zip(lx.iter()).map(|(m, v)| m + v).collect()
    }

    pub fn from_innovations(&self, xi: &[f64]) -> Field {
        let values = self.gaussian_from(xi).into_iter().map(|v| self.transform.apply(v)).collect();
        Field::new(self.grid, values).expect("finite draw")
    }

    /// Draw number `index` of the stream `seed`.
    pub fn draw(&self, seed: u64, index: u64) -> Field {
        self.from_innovations(&innovations(seed, index, self.grid.len()))
    }

    pub fn draws(&self, seed: u64, n: usize) -> Vec<Field> {
        (0..n as u64).into_par_iter().map(|i| self.draw(seed, i)).collect()
    }
}

/// `n` draws from `model` on its grid, deterministic in `seed`.
pub fn sample_field(model: &GaussianFieldModel, seed: u64, n: usize) -> Result<Vec<Field>> {
    if n == 0 {
        return Err(Error::Validation("sample count must be at least 1".into()));
    }
    Ok(FieldSampler::new(model)?.draws(seed, n))
}

/// `n` draws of the centered Gaussian field `N(0, c)` on `grid`.
pub fn sample_centered(params: &MaternParams, grid: &Grid, seed: u64, n: usize) -> Result<Vec<Field>> {
    sample_field(&GaussianFieldModel::centered(*grid, *params)?, seed, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::unit_interval(16).unwrap()
    }

    #[test]
    fn degenerate_sigma_gives_mean() {
        let g = grid();
        let mean = g.eval(|x| x[0]);
        let model = GaussianFieldModel::new(mean.clone(), MaternParams::new(1e-12, 0.3, 0).unwrap(), Transform::Identity).unwrap();
        for f in sample_field(&model, 1, 50).unwrap() {
            assert!(f.sub(&mean).linf_norm() < 1e-5);
        }
    }

    #[test]
    fn lognormal_is_positive() {
        let g = grid();
        let model = GaussianFieldModel::new(Field::zeros(g), MaternParams::new(3.0, 0.2, 1).unwrap(), Transform::Exponential).unwrap();
        for f in sample_field(&model, 9, 200).unwrap() {
            assert!(f.values().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn nodal_variance_matches_sigma_squared() {
        let g = grid();
        let model = GaussianFieldModel::centered(g, MaternParams::new(1.5, 0.4, 0).unwrap()).unwrap();
        let n = 10_000;
        let draws = sample_field(&model, 42, n).unwrap();
        for node in 0..g.len() {
            let var = draws.iter().map(|f| f.values()[node].powi(2)).sum::<f64>() / n as f64;
            assert!((var / 2.25 - 1.0).abs() < 0.05, "node {node}: {var}");
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let g = grid();
        let model = GaussianFieldModel::centered(g, MaternParams::new(1.0, 0.4, 2).unwrap()).unwrap();
        let a = sample_field(&model, 5, 20).unwrap();
        let b = sample_field(&model, 5, 20).unwrap();
        assert_eq!(a, b);
        let sampler = FieldSampler::new(&model).unwrap();
        assert_eq!(sampler.draw(5, 13), a[13]);
    }

    #[test]
    fn fine_grid_smooth_kernel_needs_jitter_but_factors() {
        let g = Grid::unit_interval(256).unwrap();
        let model = GaussianFieldModel::centered(g, MaternParams::new(1.0, 1.0, 2).unwrap()).unwrap();
        let s = FieldSampler::new(&model).unwrap();
        assert!(s.jitter() <= 1e-8);
    }

    #[test]
    fn zero_samples_rejected() {
        let model = GaussianFieldModel::centered(grid(), MaternParams::new(1.0, 1.0, 0).unwrap()).unwrap();
        assert!(sample_field(&model, 0, 0).is_err());
    }
}
