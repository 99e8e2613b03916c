use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::rng::innovations;

/// Eigenvalues below this fraction of the largest are set to zero.
const CLAMP_REL: f64 = 1e-12;

/// Discrete Karhunen–Loève basis of a covariance operator
/// `(C phi)(x_i) = sum_j c(x_i, x_j) w_j phi_j`.
///
/// Eigenfields are orthonormal in the `w`-weighted inner product and
/// eigenvalues are sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct KlBasis {
    eigenvalues: Vec<f64>,
    /// Column `k` holds eigenfield `k` at the nodes.
    eigenfields: DMatrix<f64>,
    weights: Vec<f64>,
}

impl KlBasis {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenfield(&self, k: usize) -> Vec<f64> {
        self.eigenfields.column(k).iter().copied().collect()
    }

    pub fn eigenfields(&self) -> &DMatrix<f64> {
        &self.eigenfields
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().take_while(|&&v| v > 0.0).count()
    }

    /// Sum of all eigenvalues.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `sum_{k >= K} sigma_k^2`, i.e. the variance dropped by keeping `K` modes.
    pub fn tail_sum(&self, keep: usize) -> f64 {
        self.eigenvalues[keep.min(self.len())..].iter().sum()
    }

    /// `sum_{k >= K} sigma_k ||f_k||_inf`.
    pub fn linf_tail_sum(&self, keep: usize) -> f64 {
        (keep.min(self.len())..self.len())
            .map(|k| {
                let sup = self.eigenfields.column(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                self.eigenvalues[k].sqrt() * sup
            })
            .sum()
    }

    /// Rebuilds `sum_k sigma_k^2 f_k f_k^T`, which equals the covariance matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenfields.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigenvalues[k];
        }
        scaled * self.eigenfields.transpose()
    }

    /// Builds a basis directly from its parts (e.g. a CSV import).
    pub fn from_parts(eigenvalues: Vec<f64>, eigenfields: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if eigenfields.ncols() != eigenvalues.len() || eigenfields.nrows() != weights.len() {
            return invalid("KL basis parts have inconsistent sizes");
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) || eigenvalues.iter().any(|&v| v < 0.0) {
            return invalid("KL eigenvalues must be nonnegative and nonincreasing");
        }
        Ok(Self { eigenvalues, eigenfields, weights })
    }
}

/// Solves the weighted eigenproblem through the symmetric matrix
/// `W^{1/2} C W^{1/2}` and maps eigenvectors back with `W^{-1/2}`.
pub fn kl_decompose(cov: &DMatrix<f64>, weights: &[f64]) -> Result<KlBasis> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return invalid(format!("covariance must be square, got {}x{}", n, cov.ncols()));
    }
    if weights.len() != n {
        return invalid(format!("{} quadrature weights for a {n}x{n} covariance", weights.len()));
    }
    if let Some(w) = weights.iter().find(|&&w| !(w > 0.0)) {
        return invalid(format!("quadrature weights must be positive, found {w}"));
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                return invalid(format!("covariance is not symmetric at ({i}, {j})"));
            }
        }
    }

    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sw[i] * 0.5 * (cov[(i, j)] + cov[(j, i)]) * sw[j]);
    let eig = b.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(0.0);

    let mut eigenvalues = Vec::with_capacity(n);
    let mut fields = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src];
        eigenvalues.push(if lam < CLAMP_REL * lmax || lam <= 0.0 { 0.0 } else { lam });
        let psi = eig.eigenvectors.column(src);
        // sign convention: first component above round-off is positive
        let pivot = psi.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            fields[(i, k)] = sign * psi[i] / sw[i];
        }
    }
    if !eigenvalues.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("eigensolver returned non-finite values".into()));
    }
    Ok(KlBasis { eigenvalues, eigenfields: fields, weights: weights.to_vec() })
}

/// Draws `mean + sum_{k<K} sigma_k xi_k f_k`.
///
/// The innovations of sample `i` are the prefix of the stream `(seed, i)`, so
/// draws at different truncation levels with the same seed share
/// `xi_1..xi_K` and form a coupling.
#[derive(Debug, Clone)]
pub struct KlSampler {
    grid: Grid,
    mean: Vec<f64>,
    sigmas: Vec<f64>,
    basis: KlBasis,
}

impl KlSampler {
    pub fn new(basis: KlBasis, mean: &Field) -> Result<Self> {
        if mean.values().len() != basis.eigenfields.nrows() {
            return invalid("mean field does not match the KL basis size");
        }
        let sigmas = basis.eigenvalues.iter().map(|v| v.sqrt()).collect();
        Ok(Self { grid: *mean.grid(), mean: mean.values().to_vec(), sigmas, basis })
    }

    pub fn basis(&self) -> &KlBasis {
        &self.basis
    }

    pub fn from_innovations(&self, xi: &[f64], keep: usize) -> Field {
        let mut v = self.mean.clone();
        for (k, x) in xi.iter().enumerate().take(keep) {
            let a = self.sigmas[k] * x;
            if a == 0.0 {
                continue;
            }
            for (vi, fi) in v.iter_mut().zip(self.basis.eigenfields.column(k).iter()) {
                *vi += a * fi;
            }
        }
        Field::new(self.grid, v).expect("finite draw")
    }

    pub fn draw(&self, seed: u64, index: u64, keep: usize) -> Field {
        self.from_innovations(&innovations(seed, index, keep), keep)
    }

    /// `(full, truncated)` pair sharing the first `keep` innovations.
    pub fn draw_pair(&self, seed: u64, index: u64, keep: usize) -> (Field, Field) {
        let xi = innovations(seed, index, self.basis.len());
        (self.from_innovations(&xi, xi.len()), self.from_innovations(&xi, keep))
    }
}

/// `n` truncated draws keeping `keep` modes.
pub fn sample_truncated(basis: &KlBasis, mean: &Field, keep: usize, seed: u64, n: usize) -> Result<Vec<Field>> {
    if keep > basis.len() {
        return invalid(format!("truncation level {keep} exceeds the {} available modes", basis.len()));
    }
    let sampler = KlSampler::new(basis.clone(), mean)?;
    Ok((0..n as u64).into_par_iter().map(|i| sampler.draw(seed, i, keep)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grf::{build_cov_matrix, MaternParams};

    fn exp_basis(n: usize) -> (Grid, DMatrix<f64>, KlBasis) {
        let g = Grid::unit_interval(n).unwrap();
        let c = build_cov_matrix(&MaternParams::new(1.0, 0.3, 0).unwrap(), &g);
        let b = kl_decompose(&c, &g.weights()).unwrap();
        (g, c, b)
    }

    #[test]
    fn identity_with_uniform_weights() {
        let w = 0.125;
        let b = kl_decompose(&DMatrix::identity(6, 6), &[w; 6]).unwrap();
        assert!(b.eigenvalues().iter().all(|&v| (v - w).abs() < 1e-14));
    }

    #[test]
    fn rank_one() {
        let f = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let c = &f * f.transpose() * 2.0;
        let b = kl_decompose(&c, &[0.25; 4]).unwrap();
        assert_eq!(b.rank(), 1);
        assert!(b.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn non_symmetric_rejected() {
        let mut c = DMatrix::identity(3, 3);
        c[(0, 1)] = 0.5;
        assert!(kl_decompose(&c, &[1.0; 3]).is_err());
        assert!(kl_decompose(&DMatrix::identity(3, 3), &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn trace_orthonormality_and_ordering() {
        let (g, c, b) = exp_basis(256);
        let trace: f64 = (0..g.len()).map(|i| c[(i, i)] * g.weights()[i]).sum();
        assert!((b.trace() - trace).abs() < 1e-8);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        let h = g.cell_volume();
        let gram = b.eigenfields().transpose() * b.eigenfields() * h;
        assert!((gram - DMatrix::identity(g.len(), g.len())).amax() < 1e-8);
    }

    #[test]
    fn spectral_reconstruction() {
        let (_, c, b) = exp_basis(64);
        assert!((b.reconstruct() - c).amax() < 1e-10);
    }

    #[test]
    fn zero_modes_give_mean_and_pairs_share_innovations() {
        let (g, _, b) = exp_basis(32);
        let mean = g.eval(|x| 0.5 - x[0]);
        for f in sample_truncated(&b, &mean, 0, 3, 10).unwrap() {
            assert_eq!(f, mean);
        }
        let s = KlSampler::new(b.clone(), &mean).unwrap();
        let (full, trunc) = s.draw_pair(3, 7, 5);
        assert_eq!(trunc, s.draw(3, 7, 5));
        assert!(full.sub(&s.draw(3, 7, b.len())).linf_norm() < 1e-10);
        assert!(sample_truncated(&b, &mean, b.len() + 1, 0, 1).is_err());
    }

    #[test]
    fn coupled_l2_gap_matches_tail() {
        let (g, _, b) = exp_basis(64);
        let mean = Field::zeros(g);
        let s = KlSampler::new(b.clone(), &mean).unwrap();
        let keep = 6;
        let n = 10_000;
        let ms: f64 = (0..n)
            .map(|i| {
                let (f, t) = s.draw_pair(11, i, keep);
                f.sub(&t).l2_norm().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let want = b.tail_sum(keep).sqrt();
        assert!((ms.sqrt() / want - 1.0).abs() < 0.05, "{} vs {want}", ms.sqrt());
    }
}
