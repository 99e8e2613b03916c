//! # uqsens
//!
//! Sensitivity of forward uncertainty propagation with respect to the input
//! probability measure, for the stationary diffusion equation
//! `-div(a grad u) = f` with zero Dirichlet data.
//!
//! The crate is organised around the chain
//!
//! ```text
//!   input measure P on (log a, f)  --S-->  law of u  --phi-->  law of a QoI  --rho-->  risk
//! ```
//!
//! and provides the pieces needed to measure how a perturbation `P -> Q` moves
//! each stage, together with the theoretical bounds the measured numbers must
//! respect:
//!
//! - [`grf`]: Matérn Gaussian / lognormal random fields, Karhunen–Loève
//!   decomposition and truncation, exponential-moment and Gaussian tail checks.
//! - [`pde`]: finite-difference solution operator, discrete norms, stability and
//!   local Lipschitz constants, quantities of interest.
//! - [`metrics`]: exact 1D and small discrete Wasserstein distances, total
//!   variation, the Gaussian closed form, coupling upper bounds.
//! - [`risk`]: VaR, AVaR (primal and dual), spectral, EVaR, semideviation,
//!   support-set norm bounds and the measure-sensitivity bound.
//! - [`experiments`]: end-to-end perturbation, truncation, risk and TV studies.
//! - [`cli`]: the `uqsens` command-line front end.
//!
//! Everything is deterministic given a seed. Random draws for sample `i` come
//! from their own counter-based stream (see [`rng`]), so results do not depend
//! on the number of worker threads.

#![forbid(unsafe_code)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grf;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pde;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{Field, Grid};

/// Version string embedded in every emitted report.
pub const VERSION: &str = concat!("uqsens ", env!("CARGO_PKG_VERSION"));
