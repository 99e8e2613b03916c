//! Solve `-(a u')' = f` with a manufactured solution and watch the error
//! fall at second order, then solve a 2D problem with a rough coefficient.

use std::f64::consts::PI;

use uqsens::grf::{FieldSampler, GaussianFieldModel, MaternParams, Transform};
use uqsens::pde::{h1_seminorm, solve, stability_bound};
use uqsens::{Field, Grid};

fn main() -> uqsens::Result<()> {
    let mut prev = None;
    for n in [31, 63, 127, 255] {
        let grid = Grid::unit_interval(n)?;
        let a = Field::constant(grid, 1.0);
        let f = grid.eval(|x| PI * PI * (PI * x[0]).sin());
        let u = solve(&a, &f)?;
        let exact = grid.eval(|x| (PI * x[0]).sin());
        let err = u.sub(&exact).linf_norm();
        let order = prev.map(|e: f64| (e / err).log2());
        println!("n = {n:>3}: max error {err:.3e}, order {}", order.map_or("-".into(), |o| format!("{o:.2}")));
        prev = Some(err);
    }

    let grid = Grid::unit_square(63)?;
    let model = GaussianFieldModel::new(Field::zeros(grid), MaternParams::new(1.0, 0.1, 0)?, Transform::Exponential)?;
    let a = FieldSampler::new(&model)?.draw(3, 0);
    let f = Field::constant(grid, 1.0);
    let u = solve(&a, &f)?;
    println!("2D: |u|_H1 = {:.4} <= {:.4}", h1_seminorm(&u), stability_bound(&a, &f)?);
    Ok(())
}
