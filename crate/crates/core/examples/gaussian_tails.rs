//! Sup-norm tails of a Matérn field against Borell–TIS, the Dudley entropy
//! bound for the Matérn class, and the exponential moment used by the
//! lognormal stability argument.

use uqsens::grf::{borell_tis_tail_check, dudley_entropy_integral, exp_moment_estimate, MaternClass, MaternParams};
use uqsens::Grid;

fn main() -> uqsens::Result<()> {
    let grid = Grid::unit_interval(63)?;
    let params = MaternParams::new(1.0, 0.5, 2)?;
    let class = MaternClass::new(1.0, 0.5, 2)?;
    println!("Dudley bound on E sup g: {:.4}", dudley_entropy_integral(&class, 1, 1.0));
    for r in [0.5, 1.0, 2.0, 3.0] {
        let c = borell_tis_tail_check(&params, &grid, 5, 20_000, r)?;
        println!("r = {r}: tail {:.4} (se {:.1e}) <= {:.4}  E sup = {:.3}", c.fraction, c.std_error, c.bound, c.mean_sup);
    }
    let m = exp_moment_estimate(&params, &grid, 6.0, 5, 20_000)?;
    println!("E exp(6 sup|g|) ~ {:.3e} +- {:.1e}", m.mean, m.std_error);
    Ok(())
}
