use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;

pub(crate) fn check_probability(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return invalid(format!("{what} has no atoms"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return invalid(format!("{what} has an invalid weight {w}"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOL * weights.len().max(1) as f64 {
        return invalid(format!("{what} weights sum to {total}, not 1"));
    }
    Ok(())
}

/// Weighted atoms `sum_i w_i delta_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    atoms: Vec<T>,
    weights: Vec<f64>,
}

impl<T> EmpiricalMeasure<T> {
    pub fn new(atoms: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return invalid(format!("{} atoms but {} weights", atoms.len(), weights.len()));
        }
        check_probability(&weights, "empirical measure")?;
        Ok(Self { atoms, weights })
    }

    /// Equal weights `1 / n`.
    pub fn uniform(atoms: Vec<T>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return invalid("empirical measure has no atoms");
        }
        Ok(Self { atoms, weights: vec![1.0 / n as f64; n] })
    }

    pub fn dirac(atom: T) -> Self {
        Self { atoms: vec![atom], weights: vec![1.0] }
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Law of `map(X)` for `X ~ self`; atoms are not merged.
    pub fn pushforward<U>(&self, map: impl Fn(&T) -> U) -> EmpiricalMeasure<U> {
        EmpiricalMeasure { atoms: self.atoms.iter().map(map).collect(), weights: self.weights.clone() }
    }

    /// `E[g(X)]`.
    pub fn expect(&self, g: impl Fn(&T) -> f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(x, w)| w * g(x)).sum()
    }
}

/// Pushes a probability vector through `map: i -> map[i]` into `target_len` cells.
pub fn pushforward_weights(weights: &[f64], map: &[usize], target_len: usize) -> Result<Vec<f64>> {
    if map.len() != weights.len() {
        return invalid("map length does not match the support size");
    }
    let mut out = vec![0.0; target_len];
    for (&w, &j) in weights.iter().zip(map) {
        if j >= target_len {
            return invalid(format!("map sends an atom to cell {j} outside 0..{target_len}"));
        }
        out[j] += w;
    }
    Ok(out)
}

/// Weights of the product measure, indexed `i * q.len() + j`.
pub fn product_weights(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect()
}

/// Tolerance on plan marginals.
pub const PLAN_TOL: f64 = 1e-10;

/// Coupling `pi` of two discrete measures, stored as a dense plan matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
    plan: DMatrix<f64>,
}

impl CouplingPlan {
    /// Validates nonnegativity and marginals to `1e-10`.
    pub fn new(row_weights: Vec<f64>, col_weights: Vec<f64>, plan: DMatrix<f64>) -> Result<Self> {
        check_probability(&row_weights, "row measure")?;
        check_probability(&col_weights, "column measure")?;
        if plan.nrows() != row_weights.len() || plan.ncols() != col_weights.len() {
            return invalid("plan shape does not match the marginals");
        }
        if plan.iter().any(|v| !(*v >= -PLAN_TOL)) {
            return invalid("plan has negative entries");
        }
        for (i, w) in row_weights.iter().enumerate() {
            let s: f64 = plan.row(i).iter().sum();
            if (s - w).abs() > PLAN_TOL {
                return invalid(format!("plan row {i} sums to {s}, expected {w}"));
            }
        }
        for (j, w) in col_weights.iter().enumerate() {
            let s: f64 = plan.column(j).iter().sum();
            if (s - w).abs() > PLAN_TOL {
                return invalid(format!("plan column {j} sums to {s}, expected {w}"));
            }
        }
        Ok(Self { row_weights, col_weights, plan })
    }

    /// The independent coupling `P x Q`.
    pub fn product(p: &[f64], q: &[f64]) -> Result<Self> {
        let plan = DMatrix::from_fn(p.len(), q.len(), |i, j| p[i] * q[j]);
        Self::new(p.to_vec(), q.to_vec(), plan)
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    pub fn plan(&self) -> &DMatrix<f64> {
        &self.plan
    }

    /// `sum_ij pi_ij cost_ij`.
    pub fn cost(&self, cost: &DMatrix<f64>) -> f64 {
        self.plan.component_mul(cost).sum()
    }

    /// Writes `row,col,mass` for every nonzero cell.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["row", "col", "mass"])?;
        for i in 0..self.plan.nrows() {
            for j in 0..self.plan.ncols() {
                let m = self.plan[(i, j)];
                if m != 0.0 {
                    out.write_record([i.to_string(), j.to_string(), format!("{m:e}")])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(EmpiricalMeasure::new(vec![1.0, 2.0], vec![0.5, 0.4]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(EmpiricalMeasure::<f64>::uniform(vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0, 2.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn product_plan_marginals() {
        let p = [0.2, 0.8];
        let q = [0.1, 0.6, 0.3];
        let plan = CouplingPlan::product(&p, &q).unwrap();
        assert!((plan.plan().sum() - 1.0).abs() < 1e-15);
        let mut bad = plan.plan().clone();
        bad[(0, 0)] += 1e-6;
        bad[(1, 0)] -= 1e-6;
        bad[(0, 1)] -= 1e-6;
        bad[(1, 1)] += 1e-6;
        assert!(CouplingPlan::new(p.to_vec(), q.to_vec(), bad).is_ok());
        let mut bad = plan.plan().clone();
        bad[(0, 0)] += 1e-6;
        assert!(CouplingPlan::new(p.to_vec(), q.to_vec(), bad).is_err());
    }

    #[test]
    fn pushforward_merges_mass() {
        let w = pushforward_weights(&[0.25, 0.25, 0.5], &[1, 1, 0], 2).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
        assert!(pushforward_weights(&[1.0], &[3], 2).is_err());
    }
}
