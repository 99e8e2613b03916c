use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use super::measure::{check_probability, CouplingPlan, EmpiricalMeasure};
use crate::error::{invalid, Error, Result};

/// Largest atom count accepted by the exact transport solver.
pub const EXACT_LIMIT: usize = 256;

pub(crate) fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("Wasserstein order must be a finite p >= 1, got {p}"));
    }
    Ok(())
}

/// Exact `d_p` between two weighted measures on the real line.
///
/// Integrates `|F^{-1}(u) - G^{-1}(u)|^p` over the common refinement of the
/// two quantile step functions.
pub fn wasserstein_1d_weighted(p_measure: &EmpiricalMeasure<f64>, q_measure: &EmpiricalMeasure<f64>, order: f64) -> Result<f64> {
    check_order(order)?;
    let sorted = |m: &EmpiricalMeasure<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        if m.atoms().iter().any(|x| !x.is_finite()) {
            return invalid("atoms must be finite");
        }
        idx.sort_by(|&a, &b| m.atoms()[a].total_cmp(&m.atoms()[b]));
        let xs = idx.iter().map(|&i| m.atoms()[i]).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = idx
            .iter()
            .map(|&i| {
                acc += m.weights()[i];
                acc
            })
            .collect();
        *cdf.last_mut().expect("nonempty") = 1.0;
        Ok((xs, cdf))
    };
    let (xs, fx) = sorted(p_measure)?;
    let (ys, fy) = sorted(q_measure)?;

    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < xs.len() && j < ys.len() {
        let next = fx[i].min(fy[j]);
        total += (next - prev) * (xs[i] - ys[j]).abs().powf(order);
        prev = next;
        if fx[i] <= next {
            i += 1;
        }
        if fy[j] <= next {
            j += 1;
        }
    }
    Ok(total.powf(1.0 / order))
}

/// Exact empirical `d_p` between two equally weighted sample sets.
///
/// Equal sizes reduce to the sorted (monotone) pairing; unequal sizes use the
/// common refinement of the quantile functions.
pub fn wasserstein_1d(p_samples: &[f64], q_samples: &[f64], order: f64) -> Result<f64> {
    if p_samples.is_empty() || q_samples.is_empty() {
        return invalid("Wasserstein distance of an empty sample set");
    }
    wasserstein_1d_weighted(
        &EmpiricalMeasure::uniform(p_samples.to_vec())?,
        &EmpiricalMeasure::uniform(q_samples.to_vec())?,
        order,
    )
}

/// Solves the balanced transportation problem `min <pi, cost>` over plans
/// with marginals `a`, `b` by the transportation simplex (north-west corner
/// start, `u`-`v` potentials, cycle pivots).
///
/// Returns the optimal value and plan.
pub fn transport_lp(a: &[f64], b: &[f64], cost: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let (m, n) = (a.len(), b.len());
    if cost.nrows() != m || cost.ncols() != n {
        return invalid(format!("cost matrix is {}x{}, expected {m}x{n}", cost.nrows(), cost.ncols()));
    }
    check_probability(a, "source measure")?;
    check_probability(b, "target measure")?;
    if cost.iter().any(|c| !c.is_finite()) {
        return invalid("cost matrix has non-finite entries");
    }

    let mut flow = DMatrix::<f64>::zeros(m, n);
    let mut basic = vec![false; m * n];
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);

    let mut sup = a.to_vec();
    let mut dem = b.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = sup[i].min(dem[j]).max(0.0);
        flow[(i, j)] = x;
        basic[i * n + j] = true;
        cells.push((i, j));
        sup[i] -= x;
        dem[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || sup[i] <= dem[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let cmax = cost.amax();
    let tol = 1e-12 * cmax;
    let max_iter = 100 * m * n + 1000;
    let mut degenerate_run = 0usize;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];

    for _ in 0..max_iter {
        let adj = adjacency(&cells, m, n);
        potentials(&adj, &cells, cost, m, &mut u, &mut v);

        // entering cell: most negative reduced cost, or the first negative
        // one while pivots keep stalling
        let bland = degenerate_run > m + n;
        let mut entering = None;
        let mut best = -tol;
        'scan: for r in 0..m {
            for c in 0..n {
                if basic[r * n + c] {
                    continue;
                }
                let rc = cost[(r, c)] - u[r] - v[c];
                if rc < best {
                    entering = Some((r, c));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((er, ec)) = entering else {
            let value = flow.component_mul(cost).sum();
            return Ok((value, flow));
        };

        let path = tree_path(&adj, er, m + ec, m + n);
        // path cells alternate -, +, -, ... starting at the entering row
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &e in path.iter().step_by(2) {
            let (r, c) = cells[e];
            let x = flow[(r, c)];
            let better = x < theta || (x == theta && bland && cells[e] < cells[leave]);
            if better {
                theta = x;
                leave = e;
            }
        }
        for (k, &e) in path.iter().enumerate() {
            let (r, c) = cells[e];
            if k % 2 == 0 {
                flow[(r, c)] = (flow[(r, c)] - theta).max(0.0);
            } else {
                flow[(r, c)] += theta;
            }
        }
        flow[(er, ec)] = theta;
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        let (lr, lc) = cells[leave];
        flow[(lr, lc)] = 0.0;
        basic[lr * n + lc] = false;
        basic[er * n + ec] = true;
        cells[leave] = (er, ec);
    }
    Err(Error::Numeric(format!("transportation simplex did not terminate in {max_iter} pivots")))
}

/// Adjacency of the basis tree on `m` row nodes followed by `n` column nodes;
/// entries are `(neighbour, cell index)`.
fn adjacency(cells: &[(usize, usize)], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for (e, &(r, c)) in cells.iter().enumerate() {
        adj[r].push((m + c, e));
        adj[m + c].push((r, e));
    }
    adj
}

fn potentials(adj: &[Vec<(usize, usize)>], cells: &[(usize, usize)], cost: &DMatrix<f64>, m: usize, u: &mut [f64], v: &mut [f64]) {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &(next, e) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (r, c) = cells[e];
            if next >= m {
                v[c] = cost[(r, c)] - u[r];
            } else {
                u[r] = cost[(r, c)] - v[c];
            }
            queue.push_back(next);
        }
    }
}

/// Cell indices along the tree path from `from` to `to`, in order.
fn tree_path(adj: &[Vec<(usize, usize)>], from: usize, to: usize, nodes: usize) -> Vec<usize> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
    let mut seen = vec![false; nodes];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(next, e) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, e));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let (prev, e) = parent[node].expect("basis is a spanning tree");
        path.push(e);
        node = prev;
    }
    path.reverse();
    path
}

/// Exact discrete `d_p(P, Q)` for a ground distance matrix `dist[i][j] = d(x_i, y_j)`,
/// with an optimal plan.
pub fn wasserstein_discrete_exact<T, U>(
    p_measure: &EmpiricalMeasure<T>,
    q_measure: &EmpiricalMeasure<U>,
    dist: &DMatrix<f64>,
    order: f64,
) -> Result<(f64, CouplingPlan)> {
    check_order(order)?;
    let atoms = p_measure.len().max(q_measure.len());
    if atoms > EXACT_LIMIT {
        return Err(Error::SizeExceeded { atoms, limit: EXACT_LIMIT });
    }
    if dist.iter().any(|d| !(*d >= 0.0)) {
        return invalid("ground distances must be nonnegative");
    }
    let cost = dist.map(|d| d.powf(order));
    let (value, plan) = transport_lp(p_measure.weights(), q_measure.weights(), &cost)?;
    let plan = CouplingPlan::new(p_measure.weights().to_vec(), q_measure.weights().to_vec(), plan)?;
    Ok((value.max(0.0).powf(1.0 / order), plan))
}

/// Coupling estimate of `d_p` with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEstimate {
    pub value: f64,
    /// Jackknife standard error of `(mean d^p)^{1/p}`.
    pub std_error: f64,
    pub samples: usize,
}

/// `(mean_i d(x_i, y_i)^p)^{1/p}`.
///
/// An upper bound on `d_p(P, Q)` (up to Monte Carlo error) provided the
/// pairs are drawn from a joint law whose marginals are `P` and `Q`; that is
/// the caller's responsibility.
pub fn coupling_upper_bound<T>(pairs: &[(T, T)], dist: impl Fn(&T, &T) -> f64, order: f64) -> Result<f64> {
    Ok(coupling_estimate_from(&pairs.iter().map(|(x, y)| dist(x, y)).collect::<Vec<_>>(), order)?.value)
}

/// Same as [`coupling_upper_bound`] from precomputed pair distances.
pub fn coupling_estimate_from(distances: &[f64], order: f64) -> Result<CouplingEstimate> {
    check_order(order)?;
    if distances.is_empty() {
        return invalid("coupling estimate needs at least one pair");
    }
    let powered: Vec<f64> = distances.iter().map(|d| d.powf(order)).collect();
    let value = crate::stats::mean(&powered).powf(1.0 / order);
    let std_error = crate::stats::jackknife_se_of_mean(&powered, |m| m.max(0.0).powf(1.0 / order));
    Ok(CouplingEstimate { value, std_error, samples: distances.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_dist(x: &[f64], y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(x.len(), y.len(), |i, j| (x[i] - y[j]).abs())
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(wasserstein_1d(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0], 2.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0], &[-2.5], 1.0).unwrap(), 2.5);
        assert!((wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(wasserstein_1d(&[], &[1.0], 1.0).is_err());
        assert!(wasserstein_1d(&[1.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn unequal_sizes_match_exact_lp() {
        let x = [0.3, -1.0, 2.0];
        let y = [0.0, 0.5, 1.5, 4.0, -0.2];
        for p in [1.0, 2.0, 3.0] {
            let a = wasserstein_1d(&x, &y, p).unwrap();
            let pm = EmpiricalMeasure::uniform(x.to_vec()).unwrap();
            let qm = EmpiricalMeasure::uniform(y.to_vec()).unwrap();
            let (b, _) = wasserstein_discrete_exact(&pm, &qm, &abs_dist(&x, &y), p).unwrap();
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn exact_identity_and_diracs() {
        let x = [0.0, 1.0, 3.0];
        let pm = EmpiricalMeasure::new(x.to_vec(), vec![0.2, 0.5, 0.3]).unwrap();
        let (d, plan) = wasserstein_discrete_exact(&pm, &pm, &abs_dist(&x, &x), 2.0).unwrap();
        assert_eq!(d, 0.0);
        for i in 0..3 {
            assert!((plan.plan()[(i, i)] - pm.weights()[i]).abs() < 1e-15);
        }
        let (d, _) = wasserstein_discrete_exact(
            &EmpiricalMeasure::dirac(1.0),
            &EmpiricalMeasure::dirac(4.5),
            &DMatrix::from_element(1, 1, 3.5),
            3.0,
        )
        .unwrap();
        assert!((d - 3.5).abs() < 1e-14);
    }

    #[test]
    fn size_limit() {
        let big = EmpiricalMeasure::uniform(vec![0.0; EXACT_LIMIT + 1]).unwrap();
        let small = EmpiricalMeasure::dirac(0.0);
        let err = wasserstein_discrete_exact(&big, &small, &DMatrix::zeros(EXACT_LIMIT + 1, 1), 1.0).unwrap_err();
        assert!(matches!(err, Error::SizeExceeded { atoms: 257, limit: 256 }));
    }

    #[test]
    fn degenerate_marginals_terminate() {
        // many ties in supplies and demands force degenerate pivots
        let a = vec![0.25; 4];
        let b = vec![0.25; 4];
        let cost = DMatrix::from_fn(4, 4, |i, j| ((i * 3 + j * 5) % 4) as f64);
        let (v, plan) = transport_lp(&a, &b, &cost).unwrap();
        assert!(v >= 0.0);
        assert!((plan.sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coupling_bound_examples() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(coupling_upper_bound(&pairs, |a, b| (a - b).abs(), 2.0).unwrap(), 0.0);
        let e = coupling_estimate_from(&[1.0, 3.0], 1.0).unwrap();
        assert_eq!(e.value, 2.0);
        assert!(e.std_error > 0.0);
    }
}
