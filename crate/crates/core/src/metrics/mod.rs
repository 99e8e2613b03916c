//! Probability distances between input and output laws.
//!
//! Exact `d_p` on the real line and for small discrete measures, total
//! variation, the closed form for Gaussians, and coupling-based upper bounds
//! for everything else.

mod gaussian;
mod measure;
mod tv;
mod wasserstein;

pub use gaussian::{gelbrich_gaussian, gelbrich_trace_form, psd_sqrt, GaussianSpec};
pub use measure::{product_weights, pushforward_weights, CouplingPlan, EmpiricalMeasure, MASS_TOL, PLAN_TOL};
pub use tv::{tv_by_events, tv_discrete, tv_product};
pub use wasserstein::{
    coupling_estimate_from, coupling_upper_bound, transport_lp, wasserstein_1d, wasserstein_1d_weighted,
    wasserstein_discrete_exact, CouplingEstimate, EXACT_LIMIT,
};
