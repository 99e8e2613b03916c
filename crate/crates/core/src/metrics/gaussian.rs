use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::grf::KlBasis;

/// Relative eigenvalue threshold below which covariance eigenvalues are
/// treated as zero.
const CLAMP_REL: f64 = 1e-12;

/// Gaussian measure `N(mean, cov)` on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianSpec {
    /// Validates symmetry and positive semidefiniteness (eigenvalues above
    /// `-1e-10` times the scale of the matrix).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return invalid(format!("covariance is {}x{} for a mean of length {n}", cov.nrows(), cov.ncols()));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return invalid("covariance is not symmetric");
        }
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        if n > 0 && min_eig < -1e-10 * scale {
            return invalid(format!("covariance is not positive semidefinite (eigenvalue {min_eig:e})"));
        }
        Ok(Self { mean, cov })
    }

    /// Centered Gaussian with diagonal covariance `diag(variances)`.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DVector::zeros(variances.len()), DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    /// The law of the KL coefficient vector `(sigma_k xi_k)_k`, keeping the
    /// first `keep` modes and zeroing the rest. Distances between these
    /// coincide with `L^2` distances between the corresponding fields.
    pub fn from_kl(basis: &KlBasis, keep: usize) -> Result<Self> {
        let v: Vec<f64> = basis.eigenvalues().iter().enumerate().map(|(k, &s)| if k < keep { s } else { 0.0 }).collect();
        Self::diagonal(&v)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Symmetric PSD square root with eigenvalues below `1e-12 lambda_max` clamped to zero.
pub fn psd_sqrt(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = c.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max().max(0.0);
    let roots = eig.eigenvalues.map(|l| if l <= CLAMP_REL * lmax { 0.0 } else { l.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn check_dims(g1: &GaussianSpec, g2: &GaussianSpec) -> Result<()> {
    if g1.dim() != g2.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", g1.dim(), g2.dim()));
    }
    Ok(())
}

/// 2-Wasserstein distance between two Gaussians.
///
/// Evaluated as `|m1 - m2|^2 + min_R ||S1 - S2 R||_F^2` over orthogonal `R`,
/// with `S_i = C_i^{1/2}` and the optimal `R = V U^T` from the SVD
/// `S1 S2 = U Sigma V^T`. This equals the usual trace expression but sums
/// nonnegative terms, so a vanishing distance comes out as zero rather than
/// as a difference of large traces.
pub fn gelbrich_gaussian(g1: &GaussianSpec, g2: &GaussianSpec) -> Result<f64> {
    check_dims(g1, g2)?;
    let dm = (&g1.mean - &g2.mean).norm_squared();
    if g1.dim() == 0 {
        return Ok(dm.sqrt());
    }
    let s1 = psd_sqrt(&g1.cov);
    let s2 = psd_sqrt(&g2.cov);
    let svd = (&s1 * &s2).svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let r = v_t.transpose() * u.transpose();
    let resid = (&s1 - &s2 * r).norm_squared();
    Ok((dm + resid).sqrt())
}

/// The trace form `sqrt(|dm|^2 + tr C1 + tr C2 - 2 tr (C2^{1/2} C1 C2^{1/2})^{1/2})`.
pub fn gelbrich_trace_form(g1: &GaussianSpec, g2: &GaussianSpec) -> Result<f64> {
    check_dims(g1, g2)?;
    let dm = (&g1.mean - &g2.mean).norm_squared();
    let s2 = psd_sqrt(&g2.cov);
    let cross = psd_sqrt(&(&s2 * &g1.cov * &s2));
    let d2 = dm + g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace();
    Ok(d2.max(0.0).sqrt())
}
