//! Draw lognormal Matérn fields on the unit square and look at their spread.
//!
//! Run with `cargo run --release --example matern_sampling`.

use uqsens::grf::{FieldSampler, GaussianFieldModel, MaternParams, Transform};
use uqsens::{Field, Grid};

fn main() -> uqsens::Result<()> {
    let grid = Grid::unit_square(24)?;
    for k in 0..3 {
        let params = MaternParams::new(0.5, 0.2, k)?;
        let model = GaussianFieldModel::new(Field::zeros(grid), params, Transform::Exponential)?;
        let sampler = FieldSampler::new(&model)?;
        let draws = sampler.draws(7, 200);
        let mean_max = draws.iter().map(|a| a.max()).sum::<f64>() / draws.len() as f64;
        let mean_min = draws.iter().map(|a| a.min()).sum::<f64>() / draws.len() as f64;
        println!("nu = {:.1}: E[max a] = {mean_max:.3}, E[min a] = {mean_min:.3}, jitter = {:e}", params.nu(), sampler.jitter());
    }
    Ok(())
}
