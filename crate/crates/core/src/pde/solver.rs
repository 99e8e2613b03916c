use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};

/// Face coefficients of the flux-form operator `-div(a grad .)`.
///
/// Faces adjacent to the boundary take the nodal value of their single
/// interior neighbour; interior faces take the arithmetic mean.
struct FaceCoefficients {
    /// `x`-faces, `n + 1` per row (`n` rows in 2D, one in 1D).
    x: Vec<f64>,
    /// `y`-faces, `n + 1` per column; empty in 1D.
    y: Vec<f64>,
}

fn face_mean(left: Option<f64>, right: Option<f64>) -> f64 {
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(v), None) | (None, Some(v)) => v,
        (None, None) => unreachable!("a face always touches an interior node"),
    }
}

impl FaceCoefficients {
    fn new(a: &Field) -> Self {
        let g = a.grid();
        let n = g.n();
        let av = a.values();
        let at = |i: isize, j: usize| -> Option<f64> {
            (i >= 0 && (i as usize) < n).then(|| av[g.index(i as usize, j)])
        };
        let rows = if g.dim() == 1 { 1 } else { n };
        let mut x = Vec::with_capacity(rows * (n + 1));
        for j in 0..rows {
            for f in 0..=n {
                x.push(face_mean(at(f as isize - 1, j), at(f as isize, j)));
            }
        }
        let mut y = Vec::new();
        if g.dim() == 2 {
            let at_y = |i: usize, j: isize| -> Option<f64> {
                (j >= 0 && (j as usize) < n).then(|| av[g.index(i, j as usize)])
            };
            y.reserve(n * (n + 1));
            for i in 0..n {
                for f in 0..=n {
                    y.push(face_mean(at_y(i, f as isize - 1), at_y(i, f as isize)));
                }
            }
        }
        Self { x, y }
    }
}

fn check_coefficient(a: &Field) -> Result<()> {
    if let Some((i, v)) = a.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return invalid(format!("diffusion coefficient must be strictly positive, a[{i}] = {v}"));
    }
    Ok(())
}

fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return invalid("fields live on different grids");
    }
    Ok(())
}

/// Solves `-div(a grad u) = f` on the grid with `u = 0` on the boundary.
///
/// 1D systems are tridiagonal and solved directly. 2D systems use the
/// 5-point stencil and Jacobi-preconditioned conjugate gradients to relative
/// residual `1e-10` with at most `10 n^2` iterations.
pub fn solve(a: &Field, f: &Field) -> Result<Field> {
    check_same_grid(a.grid(), f.grid())?;
    check_coefficient(a)?;
    let grid = *a.grid();
    let faces = FaceCoefficients::new(a);
    let values = match grid.dim() {
        1 => solve_tridiagonal(&grid, &faces, f.values())?,
        _ => solve_cg(&grid, &faces, f.values())?,
    };
    Field::new(grid, values)
}

fn solve_tridiagonal(grid: &Grid, faces: &FaceCoefficients, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let k = &faces.x;
    // Thomas algorithm on diag_i = (k_i + k_{i+1}) / h^2, off_i = -k_{i+1} / h^2
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for i in 0..n {
        let lower = if i > 0 { -k[i] / h2 } else { 0.0 };
        let diag = (k[i] + k[i + 1]) / h2;
        let upper = -k[i + 1] / h2;
        let denom = diag - lower * prev_c;
        if !(denom.abs() > 0.0) {
            return Err(Error::Numeric("singular tridiagonal system".into()));
        }
        c[i] = upper / denom;
        d[i] = (rhs[i] - lower * prev_d) / denom;
        prev_c = c[i];
        prev_d = d[i];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - c[i] * u[i + 1];
    }
    Ok(u)
}

fn apply_2d(grid: &Grid, faces: &FaceCoefficients, u: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    for j in 0..n {
        for i in 0..n {
            let idx = grid.index(i, j);
            let kw = faces.x[j * (n + 1) + i];
            let ke = faces.x[j * (n + 1) + i + 1];
            let ks = faces.y[i * (n + 1) + j];
            let kn = faces.y[i * (n + 1) + j + 1];
            let mut acc = (kw + ke + ks + kn) * u[idx];
            if i > 0 {
                acc -= kw * u[idx - 1];
            }
            if i + 1 < n {
                acc -= ke * u[idx + 1];
            }
            if j > 0 {
                acc -= ks * u[idx - n];
            }
            if j + 1 < n {
                acc -= kn * u[idx + n];
            }
            out[idx] = acc / h2;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_cg(grid: &Grid, faces: &FaceCoefficients, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n();
    let len = grid.len();
    let h2 = grid.h() * grid.h();
    let diag: Vec<f64> = (0..len)
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            (faces.x[j * (n + 1) + i] + faces.x[j * (n + 1) + i + 1] + faces.y[i * (n + 1) + j] + faces.y[i * (n + 1) + j + 1]) / h2
        })
        .collect();

    let mut u = vec![0.0; len];
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(u);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; len];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n * n;
    for _ in 0..max_iter {
        apply_2d(grid, faces, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..len {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= 1e-10 * b_norm {
            return Ok(u);
        }
        for k in 0..len {
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Numeric(format!("conjugate gradients did not reach 1e-10 in {max_iter} iterations")))
}

/// Applies the discrete operator `-div(a grad u)`; used to check residuals.
pub fn apply_operator(a: &Field, u: &Field) -> Result<Field> {
    check_same_grid(a.grid(), u.grid())?;
    check_coefficient(a)?;
    let grid = *a.grid();
    let faces = FaceCoefficients::new(a);
    let mut out = vec![0.0; grid.len()];
    match grid.dim() {
        1 => {
            let n = grid.n();
            let h2 = grid.h() * grid.h();
            let uv = u.values();
            for i in 0..n {
                let left = if i > 0 { uv[i - 1] } else { 0.0 };
                let right = if i + 1 < n { uv[i + 1] } else { 0.0 };
                out[i] = (faces.x[i] * (uv[i] - left) + faces.x[i + 1] * (uv[i] - right)) / h2;
            }
        }
        _ => apply_2d(&grid, &faces, u.values(), &mut out),
    }
    Field::new(grid, out)
}

/// Squared forward-difference gradient summed over all faces, boundary
/// faces included (against the zero boundary value).
fn grad_energy(u: &Field) -> f64 {
    let g = u.grid();
    let n = g.n();
    let h = g.h();
    let v = u.values();
    let mut total = 0.0;
    let rows = if g.dim() == 1 { 1 } else { n };
    for j in 0..rows {
        for f in 0..=n {
            let l = if f > 0 { v[g.index(f - 1, j)] } else { 0.0 };
            let r = if f < n { v[g.index(f, j)] } else { 0.0 };
            total += ((r - l) / h).powi(2);
        }
    }
    if g.dim() == 2 {
        for i in 0..n {
            for f in 0..=n {
                let l = if f > 0 { v[g.index(i, f - 1)] } else { 0.0 };
                let r = if f < n { v[g.index(i, f)] } else { 0.0 };
                total += ((r - l) / h).powi(2);
            }
        }
    }
    total * g.cell_volume()
}

/// Discrete `H^1_0` seminorm `||grad u||_{L^2}`.
pub fn h1_seminorm(u: &Field) -> f64 {
    grad_energy(u).sqrt()
}

/// Quadrature `L^2` norm.
pub fn l2_norm(u: &Field) -> f64 {
    u.l2_norm()
}

/// Max absolute nodal value.
pub fn linf_norm(u: &Field) -> f64 {
    u.linf_norm()
}
