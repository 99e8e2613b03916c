//! Uniform tensor grids on `(0, L)^d` and nodal fields.
//!
//! Only interior nodes are stored. Dirichlet boundary values are implicitly
//! zero, so the composite trapezoid rule on the full grid reduces to the
//! uniform weight `h^d` per interior node.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid with `n` interior nodes per axis on the box `(0, length)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, length: f64, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return invalid(format!("grid dimension must be 1 or 2, got {dim}"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return invalid(format!("grid extent must be positive, got {length}"));
        }
        if n < 2 {
            return invalid(format!("grid needs at least 2 interior nodes per axis, got {n}"));
        }
        Ok(Self { dim, length, n })
    }

    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new(1, 1.0, n)
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(2, 1.0, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width `L / (n + 1)`.
    pub fn h(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of every interior node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.cell_volume(); self.len()]
    }

    /// Linear index of node `(i, j)`; `i` runs fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }

    /// Coordinates of node `idx`. The second component is zero in 1D.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.h();
        match self.dim {
            1 => [(idx + 1) as f64 * h, 0.0],
            _ => {
                let i = idx % self.n;
                let j = idx / self.n;
                [(i + 1) as f64 * h, (j + 1) as f64 * h]
            }
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|idx| self.point(idx)).collect()
    }

    /// Euclidean diameter of the domain box.
    pub fn diameter(&self) -> f64 {
        self.length * (self.dim as f64).sqrt()
    }

    /// Volume of the domain box.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Index of the node located at `x` (within `1e-9 h`), if any.
    pub fn node_at(&self, x: [f64; 2]) -> Option<usize> {
        let h = self.h();
        let locate = |c: f64| -> Option<usize> {
            let k = (c / h).round();
            if k < 1.0 || k > self.n as f64 || (c - k * h).abs() > 1e-9 * h {
                None
            } else {
                Some(k as usize - 1)
            }
        };
        let i = locate(x[0])?;
        if self.dim == 1 {
            return Some(i);
        }
        let j = locate(x[1])?;
        Some(self.index(i, j))
    }

    /// Samples `g` at every interior node.
    pub fn eval(&self, g: impl Fn([f64; 2]) -> f64) -> Field {
        let values = (0..self.len()).map(|idx| g(self.point(idx))).collect();
        Field { grid: *self, values }
    }
}

/// Nodal values on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("field value at node {i} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Field { grid: self.grid, values }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max absolute nodal value.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.cell_volume();
        (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Weighted inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        let w = self.grid.cell_volume();
        w * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }
}
