//! Wasserstein distances: the 1D quantile formula on a Gaussian mean shift,
//! the Gaussian closed form, and exact transport between small measures.

use nalgebra::{DMatrix, DVector};
use uqsens::metrics::{gelbrich_gaussian, wasserstein_1d, wasserstein_discrete_exact, EmpiricalMeasure, GaussianSpec};
use uqsens::rng::innovations;

fn main() -> uqsens::Result<()> {
    let n = 100_000;
    let xs = innovations(1, 0, n);
    let ys: Vec<f64> = innovations(2, 0, n).iter().map(|y| y + 1.0).collect();
    println!("empirical W2(N(0,1), N(1,1)) = {:.4}", wasserstein_1d(&xs, &ys, 2.0)?);
    let g0 = GaussianSpec::new(DVector::from_element(1, 0.0), DMatrix::from_element(1, 1, 1.0))?;
    let g1 = GaussianSpec::new(DVector::from_element(1, 1.0), DMatrix::from_element(1, 1, 1.0))?;
    println!("closed form                  = {}", gelbrich_gaussian(&g0, &g1)?);

    let p: EmpiricalMeasure<[f64; 2]> = EmpiricalMeasure::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![0.5, 0.25, 0.25])?;
    let q: EmpiricalMeasure<[f64; 2]> = EmpiricalMeasure::new(vec![[1.0, 1.0], [0.5, 0.5]], vec![0.4, 0.6])?;
    let dist = DMatrix::from_fn(3, 2, |i, j| {
        let (a, b) = (p.atoms()[i], q.atoms()[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    });
    let (d, plan) = wasserstein_discrete_exact(&p, &q, &dist, 1.0)?;
    println!("exact W1 = {d:.6}");
    plan.write_csv(std::io::stdout())?;
    Ok(())
}
