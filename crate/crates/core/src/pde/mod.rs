//! Finite-difference solution operator `S(a, f)` for `-div(a grad u) = f`
//! with zero Dirichlet data, discrete norms, stability and local Lipschitz
//! constants, and quantities of interest.
//!
//! Throughout, the generic constant `c` of the stability estimates is taken to
//! be the Poincaré constant of the domain.

mod qoi;
mod solver;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};

pub use qoi::{qoi_eval, QoiSpec};
pub use solver::{apply_operator, h1_seminorm, l2_norm, linf_norm, solve};

/// Poincaré constant of `(0, L)^d`: `L / pi` in 1D, `L / (pi sqrt 2)` in 2D.
pub fn poincare_constant(grid: &Grid) -> f64 {
    grid.length() / (std::f64::consts::PI * (grid.dim() as f64).sqrt())
}

/// `c_P / a_min * ||f||_{L^2}`, the a-priori bound on `|u|_{H^1}`.
pub fn stability_bound(a: &Field, f: &Field) -> Result<f64> {
    let a_min = a.min();
    if !(a_min > 0.0) {
        return invalid(format!("diffusion coefficient must be strictly positive, min is {a_min}"));
    }
    Ok(poincare_constant(a.grid()) / a_min * f.l2_norm())
}

/// Local Lipschitz constants of the solution map on the data ball
/// `||log a||_inf <= r_a`, `||f||_{L^2} <= r_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    /// With respect to `||a_2 - a_1||_inf`: `c r_f e^{2 r_a}`.
    pub c_a: f64,
    /// With respect to `||f_2 - f_1||_{L^2}`: `c e^{r_a}`.
    pub c_f: f64,
    /// With respect to `||log a_2 - log a_1||_inf`: `c r_f e^{3 r_a}`.
    pub c_log_a: f64,
}

pub fn lipschitz_constants(c: f64, r_a: f64, r_f: f64) -> Result<LipschitzConstants> {
    if !(r_a >= 0.0 && r_f >= 0.0) {
        return invalid(format!("radii must be nonnegative, got r_a = {r_a}, r_f = {r_f}"));
    }
    Ok(LipschitzConstants {
        c_a: c * r_f * (2.0 * r_a).exp(),
        c_f: c * r_a.exp(),
        c_log_a: c * r_f * (3.0 * r_a).exp(),
    })
}

/// `C_S(r) = c (1 + r) e^{3r}`: Lipschitz constant of `S` on the ball of
/// radius `r` in the data metric.
pub fn solution_lipschitz(c: f64, r: f64) -> f64 {
    c * (1.0 + r) * (3.0 * r).exp()
}

/// Data metric `||log a_1 - log a_2||_inf + ||f_1 - f_2||_{L^2}`.
pub fn data_distance(a1: &Field, f1: &Field, a2: &Field, f2: &Field) -> f64 {
    let la1 = a1.map(f64::ln);
    let la2 = a2.map(f64::ln);
    la1.sub(&la2).linf_norm() + f1.sub(f2).l2_norm()
}

/// Distance of `(a, f)` from the reference datum `(1, 0)`.
pub fn data_radius(a: &Field, f: &Field) -> f64 {
    a.map(f64::ln).linf_norm() + f.l2_norm()
}

/// One row of an empirical Lipschitz report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzRow {
    pub pair: usize,
    pub distance: f64,
    pub solution_distance: f64,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// Largest observed `|S(x_2) - S(x_1)|_{H^1} / d_X(x_1, x_2)`; zero if no pair qualified.
    pub max_ratio: f64,
    /// Largest data radius among all inputs.
    pub radius: f64,
    /// `C_S(radius)`.
    pub bound: f64,
    /// Pairs skipped because their data distance was zero.
    pub skipped: usize,
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.max_ratio <= self.bound * (1.0 + slack)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A data pair `(a, f)`.
pub type Datum = (Field, Field);

/// Solves every pair and reports the worst observed Lipschitz ratio against
/// `C_S(r)` for the largest radius seen.
pub fn empirical_lipschitz_ratio(pairs: &[(Datum, Datum)]) -> Result<LipschitzReport> {
    use rayon::prelude::*;

    let mut radius = 0.0f64;
    for ((a1, f1), (a2, f2)) in pairs {
        radius = radius.max(data_radius(a1, f1)).max(data_radius(a2, f2));
    }
    let c = pairs.first().map(|((a, _), _)| poincare_constant(a.grid())).unwrap_or(0.0);
    let bound = solution_lipschitz(c, radius);

    let results: Vec<Result<Option<LipschitzRow>>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair, ((a1, f1), (a2, f2)))| {
            let distance = data_distance(a1, f1, a2, f2);
            if distance == 0.0 {
                return Ok(None);
            }
            let u1 = solve(a1, f1)?;
            let u2 = solve(a2, f2)?;
            let solution_distance = h1_seminorm(&u2.sub(&u1));
            Ok(Some(LipschitzRow { pair, distance, solution_distance, ratio: solution_distance / distance, bound }))
        })
        .collect();

    let mut rows = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for r in results {
        match r? {
            Some(row) => rows.push(row),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} pair(s) at zero data distance");
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(LipschitzReport { max_ratio, radius, bound, skipped, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stability_examples() {
        let g = Grid::unit_interval(255).unwrap();
        let one = Field::constant(g, 1.0);
        assert_eq!(stability_bound(&one, &Field::zeros(g)).unwrap(), 0.0);
        let f = g.eval(|x| PI * PI * (PI * x[0]).sin());
        let b = stability_bound(&one, &f).unwrap();
        assert!((b - PI / 2f64.sqrt()).abs() < 1e-2);
        let u = solve(&one, &f).unwrap();
        assert!(h1_seminorm(&u) <= b * (1.0 + 10.0 * g.h()));
        let b2 = stability_bound(&one.scale(2.0), &f).unwrap();
        assert!((b2 - b / 2.0).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_constant_examples() {
        let l = lipschitz_constants(1.0 / PI, 0.0, 0.0).unwrap();
        assert_eq!((l.c_a, l.c_f, l.c_log_a), (0.0, 1.0 / PI, 0.0));
        let l = lipschitz_constants(1.0 / PI, 1.0, 1.0).unwrap();
        assert!((l.c_log_a - 3f64.exp() / PI).abs() < 1e-12);
        assert!((l.c_log_a - 6.393).abs() < 1e-3);
        assert_eq!(solution_lipschitz(0.3, 0.0), 0.3);
        assert!(lipschitz_constants(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn linear_source_perturbation_ratio_below_poincare() {
        let g = Grid::unit_interval(63).unwrap();
        let a = Field::constant(g, 1.0);
        let f1 = g.eval(|x| x[0]);
        let f2 = f1.axpy(1.0, &g.eval(|x| (3.0 * x[0]).cos()));
        let rep = empirical_lipschitz_ratio(&[((a.clone(), f1), (a, f2))]).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.max_ratio <= poincare_constant(&g) * (1.0 + 10.0 * g.h()));
    }

    #[test]
    fn identical_pairs_are_skipped() {
        let g = Grid::unit_interval(15).unwrap();
        let d = (Field::constant(g, 2.0), g.eval(|x| x[0]));
        let rep = empirical_lipschitz_ratio(&[(d.clone(), d.clone()), (d.clone(), d)]).unwrap();
        assert!(rep.rows.is_empty());
        assert_eq!(rep.skipped, 2);
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn linearity_in_source() {
        let g = Grid::unit_square(12).unwrap();
        let a = g.eval(|x| 1.0 + x[0] * x[1]);
        let f1 = g.eval(|x| x[0]);
        let f2 = g.eval(|x| (4.0 * x[1]).sin());
        let lhs = solve(&a, &f1.scale(2.0).axpy(-3.0, &f2)).unwrap();
        let rhs = solve(&a, &f1).unwrap().scale(2.0).axpy(-3.0, &solve(&a, &f2).unwrap());
        assert!(lhs.sub(&rhs).linf_norm() < 1e-9);
    }
}
