//! Risk functionals of a standard normal sample: VaR <= AVaR <= EVaR, the
//! AVaR dual formula, and the closed form EVaR of a Gaussian.

use uqsens::metrics::EmpiricalMeasure;
use uqsens::risk::{risk_rows, write_risk_csv, RiskSpec, StepDensity};
use uqsens::rng::innovations;

fn main() -> uqsens::Result<()> {
    let m = EmpiricalMeasure::uniform(innovations(11, 0, 200_000))?;
    let specs = vec![
        RiskSpec::Expectation,
        RiskSpec::Var { alpha: 0.95 },
        RiskSpec::Avar { alpha: 0.95 },
        RiskSpec::Evar { alpha: 0.95 },
        RiskSpec::Spectral { density: StepDensity::avar(0.95)? },
        RiskSpec::Semideviation { beta: 0.5, p: 1.0 },
        RiskSpec::EssSup,
    ];
    write_risk_csv(&risk_rows(&specs, &m, 2.0)?, std::io::stdout())?;
    println!("Gaussian EVaR_0.95 = sqrt(2 ln 20) = {:.4}", (2.0 * 20f64.ln()).sqrt());
    Ok(())
}
