//! Common-random-number coupling of two input measures `P` and `Q` on
//! `(log a, f)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{FieldModelSpec, Perturbation, StudyConfig, Target};
use crate::error::{Error, Result};
use crate::grf::{build_cov_matrix, kl_decompose, FieldSampler, GaussianFieldModel, KlSampler, MaternParams};
use crate::grid::{Field, Grid};
use crate::metrics::GaussianSpec;
use crate::pde::{h1_seminorm, solve, QoiSpec};
use crate::rng::{derive_seed, innovations};

/// Stream tags for the two inputs.
pub(crate) const LOG_A_TAG: u64 = 1;
pub(crate) const SOURCE_TAG: u64 = 2;

/// Maps standard normal innovations to nodal values of a Gaussian field.
#[derive(Debug, Clone)]
pub(crate) enum Sampler {
    Constant(Vec<f64>),
    /// `mean + scale * L xi`.
    Cholesky { mean: Vec<f64>, factor: Arc<DMatrix<f64>>, scale: f64 },
    /// `mean + sum_{k < keep} sigma_k xi_k f_k`.
    Kl { sampler: Arc<KlSampler>, keep: usize },
}

impl Sampler {
    pub fn values(&self, xi: &[f64]) -> Vec<f64> {
        match self {
            Sampler::Constant(v) => v.clone(),
            Sampler::Cholesky { mean, factor, scale } => {
                let lx = factor.as_ref() * DVector::from_column_slice(xi);
                mean.iter().zip(lx.iter()).map(|(m, v)| m + scale * v).collect()
            }
            Sampler::Kl { sampler, keep } => sampler.from_innovations(xi, *keep).into_values(),
        }
    }

    /// The Gaussian law of the nodal values in `L^2`-isometric coordinates
    /// `sqrt(w_i) v_i`.
    pub fn weighted_gaussian(&self, grid: &Grid) -> Result<GaussianSpec> {
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let n = grid.len();
        let (mean, cov) = match self {
            Sampler::Constant(v) => (v.clone(), DMatrix::zeros(n, n)),
            Sampler::Cholesky { mean, factor, scale } => (mean.clone(), factor.as_ref() * factor.transpose() * (scale * scale)),
            Sampler::Kl { sampler, keep } => {
                let b = sampler.basis();
                let f = b.eigenfields().columns(0, *keep);
                let lam = DMatrix::from_diagonal(&DVector::from_iterator(*keep, b.eigenvalues()[..*keep].iter().copied()));
                (sampler.from_innovations(&[], 0).into_values(), &f * lam * f.transpose())
            }
        };
        let mean = DVector::from_iterator(n, mean.iter().zip(&sw).map(|(m, s)| m * s));
        let mut cov = DMatrix::from_fn(n, n, |i, j| sw[i] * cov[(i, j)] * sw[j]);
        cov = (&cov + cov.transpose()) * 0.5;
        GaussianSpec::new(mean, cov)
    }
}

fn cholesky_sampler(grid: &Grid, mean: f64, params: &MaternParams, scale: f64) -> Result<Sampler> {
    let model = GaussianFieldModel::centered(*grid, *params)?;
    let fs = FieldSampler::new(&model)?;
    Ok(Sampler::Cholesky { mean: vec![mean; grid.len()], factor: Arc::new(fs.factor().clone()), scale })
}

pub(crate) fn base_sampler(grid: &Grid, spec: &FieldModelSpec) -> Result<Sampler> {
    match &spec.matern {
        None => Ok(Sampler::Constant(vec![spec.mean; grid.len()])),
        Some(p) => cholesky_sampler(grid, spec.mean, p, 1.0),
    }
}

pub(crate) fn kl_sampler(grid: &Grid, spec: &FieldModelSpec) -> Result<Arc<KlSampler>> {
    let params = spec.matern.as_ref().ok_or_else(|| Error::Config("a KL expansion needs a matern model".into()))?;
    let basis = kl_decompose(&build_cov_matrix(params, grid), &grid.weights())?;
    Ok(Arc::new(KlSampler::new(basis, &Field::constant(*grid, spec.mean))?))
}

/// `(P, Q)` samplers for a model under a perturbation.
pub(crate) fn perturbed_pair(grid: &Grid, spec: &FieldModelSpec, perturbation: &Perturbation) -> Result<(Sampler, Sampler)> {
    let p = base_sampler(grid, spec)?;
    let q = match (perturbation, &p) {
        (Perturbation::None, _) => p.clone(),
        (Perturbation::MeanShift { delta }, Sampler::Constant(v)) => Sampler::Constant(v.iter().map(|x| x + delta).collect()),
        (Perturbation::MeanShift { delta }, Sampler::Cholesky { mean, factor, scale }) => Sampler::Cholesky {
            mean: mean.iter().map(|x| x + delta).collect(),
            factor: factor.clone(),
            scale: *scale,
        },
        (Perturbation::StdScale { kappa }, Sampler::Cholesky { mean, factor, scale }) => {
            Sampler::Cholesky { mean: mean.clone(), factor: factor.clone(), scale: scale * kappa }
        }
        (Perturbation::CorrLength { kappa }, Sampler::Cholesky { .. }) => {
            let mut params = spec.matern.expect("validated");
            params.rho *= kappa;
            cholesky_sampler(grid, spec.mean, &params, 1.0)?
        }
        (Perturbation::Truncation { k }, _) => {
            let kl = kl_sampler(grid, spec)?;
            let full = kl.basis().len();
            return Ok((Sampler::Kl { sampler: kl.clone(), keep: full }, Sampler::Kl { sampler: kl, keep: *k }));
        }
        _ => return Err(Error::Config("perturbation needs a random (matern) model".into())),
    };
    Ok((p, q))
}

/// Both inputs under `P` and under `Q`.
#[derive(Debug, Clone)]
pub(crate) struct CoupledModel {
    pub grid: Grid,
    pub log_a: (Sampler, Sampler),
    pub source: (Sampler, Sampler),
    pub clip: Option<f64>,
    pub radius: Option<f64>,
    pub seed: u64,
}

impl CoupledModel {
    pub fn from_config(cfg: &StudyConfig) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let none = Perturbation::None;
        let (pa, ps) = match cfg.target {
            Target::LogA => (&cfg.perturbation, &none),
            Target::Source => (&none, &cfg.perturbation),
        };
        Ok(Self {
            grid,
            log_a: perturbed_pair(&grid, &cfg.log_a, pa)?,
            source: perturbed_pair(&grid, &cfg.source, ps)?,
            clip: cfg.bounded_support.map(|b| b.clip),
            radius: cfg.bounded_support.map(|b| b.radius),
            seed: cfg.seed,
        })
    }

    fn xi(&self, tag: u64, index: u64) -> Vec<f64> {
        let mut xi = innovations(derive_seed(self.seed, tag), index, self.grid.len());
        if let Some(c) = self.clip {
            xi.iter_mut().for_each(|x| *x = x.clamp(-c, c));
        }
        xi
    }

    /// `(log a, f)` under `P` and under `Q` for sample `index`.
    pub fn draw(&self, index: u64) -> [Field; 4] {
        let xa = self.xi(LOG_A_TAG, index);
        let xf = self.xi(SOURCE_TAG, index);
        let g = self.grid;
        let mk = |v: Vec<f64>| Field::new(g, v).expect("finite draw");
        [
            mk(self.log_a.0.values(&xa)),
            mk(self.source.0.values(&xf)),
            mk(self.log_a.1.values(&xa)),
            mk(self.source.1.values(&xf)),
        ]
    }
}

/// One accepted coupled sample after solving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evaluated {
    pub index: u64,
    pub qoi_p: f64,
    pub qoi_q: f64,
    /// `||log a_p - log a_q||_inf + ||f_p - f_q||_{L^2}`.
    pub input: f64,
    /// `|u_p - u_q|_{H^1}`.
    pub output: f64,
    /// Largest `||log a||_inf` of the two sides.
    pub log_a_sup: f64,
    /// Largest `||f||_{L^2}` of the two sides.
    pub source_norm: f64,
    pub solution_norm: f64,
    /// `log((1 + ||f||)^{2p} e^{6p ||log a||_inf})` under `P` and `Q`.
    pub log_moment: (f64, f64),
}

/// Solves a coupled pair of data `(log a, f)`.
pub(crate) fn evaluate_pair(index: u64, p: (&Field, &Field), q: (&Field, &Field), qoi: &QoiSpec, order: f64) -> Result<Evaluated> {
    let up = solve(&p.0.map(f64::exp), p.1)?;
    let uq = if p.0 == q.0 && p.1 == q.1 { up.clone() } else { solve(&q.0.map(f64::exp), q.1)? };
    let input = p.0.sub(q.0).linf_norm() + p.1.sub(q.1).l2_norm();
    let sides = [(p.0.linf_norm(), p.1.l2_norm()), (q.0.linf_norm(), q.1.l2_norm())];
    let lm = |(la, f): (f64, f64)| 2.0 * order * (1.0 + f).ln() + 6.0 * order * la;
    Ok(Evaluated {
        index,
        qoi_p: qoi.eval(&up)?,
        qoi_q: qoi.eval(&uq)?,
        input,
        output: h1_seminorm(&up.sub(&uq)),
        log_a_sup: sides[0].0.max(sides[1].0),
        source_norm: sides[0].1.max(sides[1].1),
        solution_norm: h1_seminorm(&up).max(h1_seminorm(&uq)),
        log_moment: (lm(sides[0]), lm(sides[1])),
    })
}

/// Give up once this many draws per requested sample have been tried.
const MAX_ATTEMPTS_PER_SAMPLE: usize = 20;

/// Draws coupled samples in index order until `n` pass the bounded-support
/// filter, solving each accepted pair. Returns the samples and the number of
/// rejected draws.
pub(crate) fn run_coupled(model: &CoupledModel, qoi: &QoiSpec, n: usize, order: f64) -> Result<(Vec<Evaluated>, usize)> {
    let cap = n * MAX_ATTEMPTS_PER_SAMPLE;
    let mut accepted = Vec::with_capacity(n);
    let mut next = 0usize;
    while accepted.len() < n {
        if next >= cap {
            return Err(Error::Numeric(format!(
                "bounded-support filter accepted only {} of {next} draws; increase the radius or reduce the variance",
                accepted.len()
            )));
        }
        let batch = (n - accepted.len()).max(64).min(cap - next);
        let results: Vec<Option<Result<Evaluated>>> = (next..next + batch)
            .into_par_iter()
            .map(|i| {
                let [la_p, f_p, la_q, f_q] = model.draw(i as u64);
                if let Some(r) = model.radius {
                    let inside = |la: &Field, f: &Field| la.linf_norm() <= r && f.l2_norm() <= r;
                    if !inside(&la_p, &f_p) || !inside(&la_q, &f_q) {
                        return None;
                    }
                }
                Some(evaluate_pair(i as u64, (&la_p, &f_p), (&la_q, &f_q), qoi, order))
            })
            .collect();
        next += batch;
        for r in results.into_iter().flatten() {
            if accepted.len() < n {
                accepted.push(r?);
            }
        }
    }
    let last = accepted.last().map(|e| e.index as usize + 1).unwrap_or(0);
    Ok((accepted, last - n))
}
