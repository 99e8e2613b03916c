//! Gaussian and lognormal random fields with half-integer Matérn covariance.
//!
//! Covers covariance assembly, Cholesky sampling, the weighted Karhunen–Loève
//! eigenproblem with truncated (coupled) sampling, and the numeric evaluators
//! behind the uniform exponential-moment argument: Dudley's entropy integral,
//! exponential moments of the sup-norm, and Borell–TIS tail checks.

mod bounds;
mod kl;
mod matern;
mod sampling;

pub use bounds::{
    borell_tis_tail_check, covering_number_bound, dudley_entropy_integral, exp_moment_estimate,
    BorellTisCheck, ExpMomentEstimate, MaternClass,
};
pub use kl::{kl_decompose, sample_truncated, KlBasis, KlSampler};
pub use matern::{build_cov_matrix, cov_matrix_from_points, matern_cov, MaternParams};
pub use sampling::{
    jittered_cholesky, sample_centered, sample_field, FieldSampler, GaussianFieldModel, Transform,
};
