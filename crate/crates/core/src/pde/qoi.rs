use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};

use super::{h1_seminorm, poincare_constant};

/// Scalar quantity of interest `phi(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum QoiSpec {
    /// `u(x0)` at a grid node.
    PointEval { node: usize },
    /// Mean of `u` over the nodes inside a box `D'`.
    SubdomainMean { nodes: Vec<usize> },
    /// `int_D |u0 - u|^2`.
    L2Dist { u0: Field },
    /// `|u0 - u|_{H^1}^2`.
    H1Dist { u0: Field },
}

impl QoiSpec {
    /// Point evaluation at `x0`, which must coincide with a grid node.
    pub fn point_eval(grid: &Grid, x0: [f64; 2]) -> Result<Self> {
        match grid.node_at(x0) {
            Some(node) => Ok(QoiSpec::PointEval { node }),
            None => invalid(format!("x0 = {x0:?} is not a grid node (h = {})", grid.h())),
        }
    }

    /// Mean over the closed box `[lo, hi]`, which must lie in the domain and
    /// contain at least one node.
    pub fn subdomain_mean(grid: &Grid, lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let d = grid.dim();
        for k in 0..d {
            if !(0.0 <= lo[k] && lo[k] <= hi[k] && hi[k] <= grid.length()) {
                return invalid(format!("subdomain [{lo:?}, {hi:?}] is not a box inside the domain"));
            }
        }
        let tol = 1e-9 * grid.h();
        let nodes: Vec<usize> = (0..grid.len())
            .filter(|&idx| {
                let x = grid.point(idx);
                (0..d).all(|k| x[k] >= lo[k] - tol && x[k] <= hi[k] + tol)
            })
            .collect();
        if nodes.is_empty() {
            return invalid("subdomain contains no grid nodes");
        }
        Ok(QoiSpec::SubdomainMean { nodes })
    }

    fn check_grid(&self, u: &Field) -> Result<()> {
        let ok = match self {
            QoiSpec::PointEval { node } => *node < u.grid().len(),
            QoiSpec::SubdomainMean { nodes } => nodes.iter().all(|&n| n < u.grid().len()),
            QoiSpec::L2Dist { u0 } | QoiSpec::H1Dist { u0 } => u0.grid() == u.grid(),
        };
        if ok {
            Ok(())
        } else {
            invalid("quantity of interest does not match the solution grid")
        }
    }

    pub fn eval(&self, u: &Field) -> Result<f64> {
        self.check_grid(u)?;
        Ok(match self {
            QoiSpec::PointEval { node } => u.values()[*node],
            QoiSpec::SubdomainMean { nodes } => nodes.iter().map(|&n| u.values()[n]).sum::<f64>() / nodes.len() as f64,
            QoiSpec::L2Dist { u0 } => u0.sub(u).l2_norm().powi(2),
            QoiSpec::H1Dist { u0 } => h1_seminorm(&u0.sub(u)).powi(2),
        })
    }

    /// Lipschitz constant of `phi` with respect to the `H^1_0` seminorm on the
    /// ball `|u|_{H^1} <= r`.
    ///
    /// Point evaluation is bounded on `H^1_0` only in 1D, with constant
    /// `sqrt(x0 (L - x0) / L)`; in 2D this returns an error.
    pub fn lipschitz_constant(&self, grid: &Grid, r: f64) -> Result<f64> {
        let c = poincare_constant(grid);
        match self {
            QoiSpec::PointEval { node } => {
                if grid.dim() != 1 {
                    return invalid("point evaluation is not bounded on H^1_0 in 2D");
                }
                let x = grid.point(*node)[0];
                let l = grid.length();
                Ok((x * (l - x) / l).sqrt())
            }
            QoiSpec::SubdomainMean { nodes } => {
                let vol = nodes.len() as f64 * grid.cell_volume();
                Ok(c / vol.sqrt())
            }
            QoiSpec::L2Dist { u0 } => Ok(2.0 * (c * r + u0.l2_norm()) * c),
            QoiSpec::H1Dist { u0 } => Ok(2.0 * (r + h1_seminorm(u0))),
        }
    }
}

/// Convenience wrapper for [`QoiSpec::eval`].
pub fn qoi_eval(spec: &QoiSpec, u: &Field) -> Result<f64> {
    spec.eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        let g = Grid::unit_interval(255).unwrap();
        let q = QoiSpec::subdomain_mean(&g, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((q.eval(&Field::constant(g, 3.0)).unwrap() - 3.0).abs() < 1e-14);
        let u = g.eval(|x| (PI * x[0]).sin());
        assert_eq!(QoiSpec::L2Dist { u0: u.clone() }.eval(&u).unwrap(), 0.0);
        let v = QoiSpec::H1Dist { u0: Field::zeros(g) }.eval(&u).unwrap();
        assert!((v - PI * PI / 2.0).abs() < 2e-2);
    }

    #[test]
    fn point_eval_requires_node() {
        let g = Grid::unit_interval(3).unwrap();
        assert_eq!(QoiSpec::point_eval(&g, [0.5, 0.0]).unwrap(), QoiSpec::PointEval { node: 1 });
        assert!(QoiSpec::point_eval(&g, [0.4, 0.0]).is_err());
        let g2 = Grid::unit_square(3).unwrap();
        let q = QoiSpec::point_eval(&g2, [0.5, 0.25]).unwrap();
        assert!(q.lipschitz_constant(&g2, 1.0).is_err());
    }

    #[test]
    fn point_eval_bound_holds_discretely() {
        let g = Grid::unit_interval(31).unwrap();
        let q = QoiSpec::point_eval(&g, [0.25, 0.0]).unwrap();
        let lip = q.lipschitz_constant(&g, 0.0).unwrap();
        for k in 1..6 {
            let u = g.eval(|x| (k as f64 * PI * x[0]).sin() + x[0] * (1.0 - x[0]));
            assert!(q.eval(&u).unwrap().abs() <= lip * h1_seminorm(&u) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn subdomain_outside_domain_rejected() {
        let g = Grid::unit_square(5).unwrap();
        assert!(QoiSpec::subdomain_mean(&g, [0.5, 0.5], [1.5, 1.0]).is_err());
        assert!(QoiSpec::subdomain_mean(&g, [0.01, 0.01], [0.02, 0.02]).is_err());
    }
}
