use rayon::prelude::*;

use super::config::{StudyConfig, Target};
use super::coupled::{base_sampler, kl_sampler, LOG_A_TAG, SOURCE_TAG};
use super::report::{Check, Label, SampleRow, StudyReport};
use crate::error::Result;
use crate::grid::Field;
use crate::metrics::{coupling_estimate_from, gelbrich_gaussian, GaussianSpec};
use crate::pde::{h1_seminorm, poincare_constant, solve};
use crate::rng::{derive_seed, innovations};

/// `E|xi|` for a standard normal `xi`.
const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

/// Tolerance on the Gaussian closed form against the tail sum.
const GELBRICH_TOL: f64 = 1e-10;

/// Relative tolerance of the coupled `L^2` estimate against the tail sum.
const COUPLED_REL_TOL: f64 = 0.05;

/// `0, 1, 2, 4, ...` below `full`, then `full`.
pub fn default_levels(full: usize) -> Vec<usize> {
    let mut v = vec![0];
    let mut k = 1;
    while k < full {
        v.push(k);
        k *= 2;
    }
    v.push(full);
    v.dedup();
    v
}

struct LevelSample {
    l2: f64,
    linf: f64,
    input: f64,
    output: f64,
    qoi_q: f64,
    log_a_sup: f64,
    source_norm: f64,
}

struct Sample {
    qoi_p: f64,
    levels: Vec<LevelSample>,
}

/// Truncation study: compares the full Karhunen–Loève model of the target
/// input with its truncations at each requested level.
pub fn run_truncation_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let qoi = cfg.qoi.build(&grid)?;
    let (target, other_spec, tag, other_tag) = match cfg.target {
        Target::LogA => (cfg.log_a, cfg.source, LOG_A_TAG, SOURCE_TAG),
        Target::Source => (cfg.source, cfg.log_a, SOURCE_TAG, LOG_A_TAG),
    };
    let kl = kl_sampler(&grid, &target)?;
    let basis = kl.basis();
    let full = basis.len();
    let other = base_sampler(&grid, &other_spec)?;
    let mut levels = cfg.truncation_levels.clone().unwrap_or_else(|| default_levels(full));
    levels.sort_unstable();
    levels.dedup();

    let sigmas: Vec<f64> = basis.eigenvalues().iter().map(|v| v.sqrt()).collect();
    let weights = grid.weights();
    let seed = cfg.seed;

    let samples: Vec<Result<Sample>> = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| {
            let xi = innovations(derive_seed(seed, tag), i, full);
            let other_vals = Field::new(grid, other.values(&innovations(derive_seed(seed, other_tag), i, grid.len())))?;
            let full_field = kl.from_innovations(&xi, full);
            let assemble = |target_vals: &Field| -> Result<(Field, Field)> {
                Ok(match cfg.target {
                    Target::LogA => (target_vals.clone(), other_vals.clone()),
                    Target::Source => (other_vals.clone(), target_vals.clone()),
                })
            };
            let (la_p, f_p) = assemble(&full_field)?;
            let up = solve(&la_p.map(f64::exp), &f_p)?;
            let qoi_p = qoi.eval(&up)?;

            // accumulate the dropped modes from the top down
            let mut tail = vec![0.0; grid.len()];
            let mut next = full;
            let mut out = Vec::with_capacity(levels.len());
            for &k in levels.iter().rev() {
                while next > k {
                    next -= 1;
                    let a = sigmas[next] * xi[next];
                    if a != 0.0 {
                        for (t, f) in tail.iter_mut().zip(basis.eigenfields().column(next).iter()) {
                            *t += a * f;
                        }
                    }
                }
                let l2 = tail.iter().zip(&weights).map(|(t, w)| w * t * t).sum::<f64>().sqrt();
                let linf = tail.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                let truncated = Field::new(grid, full_field.values().iter().zip(&tail).map(|(v, t)| v - t).collect())?;
                let (la_q, f_q) = assemble(&truncated)?;
                let uq = if linf == 0.0 { up.clone() } else { solve(&la_q.map(f64::exp), &f_q)? };
                out.push(LevelSample {
                    l2,
                    linf,
                    input: if cfg.target == Target::LogA { linf } else { l2 },
                    output: h1_seminorm(&up.sub(&uq)),
                    qoi_q: qoi.eval(&uq)?,
                    log_a_sup: la_p.linf_norm().max(la_q.linf_norm()),
                    source_norm: f_p.l2_norm().max(f_q.l2_norm()),
                });
            }
            out.reverse();
            Ok(Sample { qoi_p, levels: out })
        })
        .collect();
    let samples: Vec<Sample> = samples.into_iter().collect::<Result<_>>()?;

    let mut report = StudyReport::new(cfg.clone());
    let c = poincare_constant(&grid);
    let disc = 10.0 * grid.h();
    let gaussian_full = GaussianSpec::from_kl(basis, full)?;
    let mut prev_exact = f64::INFINITY;
    let mut worst_increase = f64::NEG_INFINITY;

    for (li, &k) in levels.iter().enumerate() {
        let tag = |s: &str| format!("{s}[k={k}]");
        let exact = basis.tail_sum(k).sqrt();
        report.quantity(tag("sqrt_tail_sum"), exact, None, Label::Exact);
        let gel = gelbrich_gaussian(&gaussian_full, &GaussianSpec::from_kl(basis, k)?)?;
        report.quantity(tag("gaussian_l2_distance"), gel, None, Label::Exact);
        report.check(Check::close(tag("gaussian_tail_identity"), gel, exact, GELBRICH_TOL));
        worst_increase = worst_increase.max(gel - prev_exact);
        prev_exact = gel;

        let l2: Vec<f64> = samples.iter().map(|s| s.levels[li].l2).collect();
        let e2 = coupling_estimate_from(&l2, 2.0)?;
        report.quantity(tag("coupled_l2_distance"), e2.value, Some(e2.std_error), Label::McEstimate);
        report.check(Check::close(tag("coupled_l2_matches_tail"), e2.value, exact, (COUPLED_REL_TOL * exact).max(3.0 * e2.std_error)));

        let linf: Vec<f64> = samples.iter().map(|s| s.levels[li].linf).collect();
        let e1 = coupling_estimate_from(&linf, 1.0)?;
        let linf_bound = MEAN_ABS_NORMAL * basis.linf_tail_sum(k);
        report.quantity(tag("coupled_linf_distance"), e1.value, Some(e1.std_error), Label::UpperBound);
        report.quantity(tag("linf_tail_bound"), linf_bound, None, Label::Exact);
        report.check(Check::new(tag("linf_tail_bound"), e1.value, linf_bound, 3.0 * e1.std_error));

        let inputs: Vec<f64> = samples.iter().map(|s| s.levels[li].input).collect();
        let outputs: Vec<f64> = samples.iter().map(|s| s.levels[li].output).collect();
        let din = coupling_estimate_from(&inputs, cfg.p)?;
        let dout = coupling_estimate_from(&outputs, cfg.p)?;
        let r_a = samples.iter().map(|s| s.levels[li].log_a_sup).fold(0.0, f64::max);
        let r_f = samples.iter().map(|s| s.levels[li].source_norm).fold(0.0, f64::max);
        // pathwise constant on the observed ball
        let cs = c * (1.0 + r_f) * (3.0 * r_a).exp();
        report.quantity(tag("input_distance"), din.value, Some(din.std_error), Label::UpperBound);
        report.quantity(tag("output_distance"), dout.value, Some(dout.std_error), Label::UpperBound);
        report.quantity(tag("solution_lipschitz"), cs, None, Label::McEstimate);
        report.check(Check::new(tag("solution_pushforward"), dout.value, cs * din.value, 3.0 * dout.std_error + disc * din.value));

        for (i, s) in samples.iter().enumerate() {
            let l = &s.levels[li];
            report.samples.push(SampleRow {
                sample: i as u64,
                qoi_p: s.qoi_p,
                qoi_q: l.qoi_q,
                input_distance: l.input,
                output_distance: l.output,
                level: Some(k),
            });
        }
    }
    report.check(Check::new("gaussian_distance_monotone", worst_increase.max(0.0), 0.0, 1e-12));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::StudyKind;
    use crate::grf::MaternParams;

    #[test]
    fn levels() {
        assert_eq!(default_levels(10), vec![0, 1, 2, 4, 8, 10]);
        assert_eq!(default_levels(1), vec![0, 1]);
    }

    #[test]
    fn full_rank_is_zero_and_checks_pass() {
        let mut c = StudyConfig::with_defaults(StudyKind::Truncation);
        c.grid.n = 16;
        c.n = 400;
        c.target = Target::Source;
        c.source.matern = Some(MaternParams { sigma: 1.0, rho: 0.2, k: 0 });
        let r = run_truncation_study(&c).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.get("gaussian_l2_distance[k=16]").unwrap().value, 0.0);
        assert_eq!(r.get("coupled_l2_distance[k=16]").unwrap().value, 0.0);
        assert_eq!(r.get("output_distance[k=16]").unwrap().value, 0.0);
        assert_eq!(r.samples.len(), 400 * default_levels(16).len());
    }
}
