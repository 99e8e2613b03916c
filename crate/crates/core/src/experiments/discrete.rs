//! Randomised finite instances for the risk and total-variation studies.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::config::StudyConfig;
use super::report::{Check, Label, StudyReport};
use crate::error::{Error, Result};
use crate::metrics::{
    pushforward_weights, transport_lp, tv_by_events, tv_discrete, tv_product, wasserstein_discrete_exact, EmpiricalMeasure,
};
use crate::risk::{avar_on_plan, product_risk_discrete, sensitivity_bound, RiskSpec};
use crate::rng::{derive_seed, sample_stream};

const RISK_TAG: u64 = 3;
const TV_TAG: u64 = 4;

/// Exact-arithmetic tolerance for finite identities.
const EXACT_TOL: f64 = 1e-12;
const NUMERIC_TOL: f64 = 1e-9;

/// Random probability vector on `n` atoms; each atom is emptied with
/// probability 1/5 unless that would empty all of them.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    for x in w.iter_mut() {
        if rng.random_bool(0.2) {
            *x = 0.0;
        }
    }
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A smooth scalar observable on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Observable {
    a: f64,
    b: f64,
    c: f64,
}

impl Observable {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self { a: rng.random_range(-2.0..2.0), b: rng.random_range(0.0..10.0), c: rng.random_range(-1.0..1.0) }
    }

    fn eval(&self, z: f64) -> f64 {
        self.a * (self.b * z).sin() + self.c * z
    }
}

/// Largest difference quotient of `x` over the points `z`; the exact
/// Lipschitz constant of `x` restricted to those points.
fn lipschitz_on(points: &[f64], x: &Observable) -> f64 {
    let mut best = 0.0f64;
    for (i, &s) in points.iter().enumerate() {
        for &t in &points[i + 1..] {
            if s != t {
                best = best.max((x.eval(s) - x.eval(t)).abs() / (s - t).abs());
            }
        }
    }
    best
}

struct Worst {
    excess: f64,
    tol: f64,
    count: usize,
}

impl Worst {
    fn new() -> Self {
        Self { excess: f64::NEG_INFINITY, tol: 0.0, count: 0 }
    }

    /// Records `lhs - rhs`; counts a violation when it exceeds `tol`.
    fn push(&mut self, lhs: f64, rhs: f64, tol: f64) {
        let e = lhs - rhs;
        if e > tol {
            self.count += 1;
        }
        self.excess = self.excess.max(e);
        self.tol = self.tol.max(tol);
    }

    fn check(&self, name: &str) -> Check {
        let mut c = Check::new(name, self.excess, 0.0, self.tol);
        if self.count > 0 {
            c.status = super::report::CheckStatus::Fail;
        }
        c
    }
}

/// Discrete measure-sensitivity instances: random `P`, `Q` on at most
/// `max_atoms` points of `[0, 1]` and a random observable, with the exact
/// transport distance on the right-hand side.
pub fn discrete_risk_checks(cfg: &StudyConfig, report: &mut StudyReport) -> Result<()> {
    let alpha = match cfg.risk {
        RiskSpec::Avar { alpha } => Some(alpha),
        _ => None,
    };
    let mut sens = Worst::new();
    let mut product = Worst::new();
    let mut chain = Worst::new();
    let mut max_ratio = 0.0f64;
    let mut boundable = true;
    let seed = derive_seed(cfg.seed, RISK_TAG);

    for t in 0..cfg.instances as u64 {
        let mut rng = sample_stream(seed, t);
        let m = rng.random_range(1..=cfg.max_atoms);
        let k = rng.random_range(1..=cfg.max_atoms);
        let xs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let ys: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let pw = random_weights(&mut rng, m);
        let qw = random_weights(&mut rng, k);
        let obs = Observable::random(&mut rng);

        let union: Vec<f64> = xs.iter().chain(&ys).copied().collect();
        let lip = lipschitz_on(&union, &obs);
        let pm = EmpiricalMeasure::new(xs.clone(), pw.clone())?;
        let qm = EmpiricalMeasure::new(ys.clone(), qw.clone())?;
        let dist = DMatrix::from_fn(m, k, |i, j| (xs[i] - ys[j]).abs());
        let (d, plan) = wasserstein_discrete_exact(&pm, &qm, &dist, cfg.p)?;

        let xp = pm.pushforward(|z| obs.eval(*z));
        let xq = qm.pushforward(|z| obs.eval(*z));
        let rp = cfg.risk.evaluate(&xp)?;
        let rq = cfg.risk.evaluate(&xq)?;
        let gap = (rp - rq).abs();
        let tol = NUMERIC_TOL * (1.0 + rp.abs() + rq.abs());

        let bound = match sensitivity_bound(&cfg.risk, lip, 1.0, cfg.p, d) {
            Ok(b) => b,
            Err(Error::UnboundedSupport(_)) => {
                boundable = false;
                break;
            }
            Err(e) => return Err(e),
        };
        sens.push(gap, bound.bound, tol);
        if bound.bound > 0.0 {
            max_ratio = max_ratio.max(gap / bound.bound);
        }

        if let Some(alpha) = alpha {
            let pr = product_risk_discrete(xp.atoms(), &plan, alpha)?;
            product.push((pr.on_plan - pr.on_marginal).abs(), 0.0, 1e-10);
            // gap <= AVaR_pi(|X o p1 - X o p2|) <= Lip AVaR_pi(d) <= bound
            let diff = DMatrix::from_fn(m, k, |i, j| (xp.atoms()[i] - xq.atoms()[j]).abs());
            let step1 = avar_on_plan(&diff, &plan, alpha)?;
            let step2 = lip * avar_on_plan(&dist, &plan, alpha)?;
            chain.push(gap, step1, tol);
            chain.push(step1, step2, tol);
            chain.push(step2, bound.bound, tol);
        }
    }

    report.quantity("discrete_instances", cfg.instances as f64, None, Label::Exact);
    if !boundable {
        report.check(Check::not_boundable("discrete_sensitivity", f64::NAN));
        return Ok(());
    }
    report.quantity("discrete_violations", sens.count as f64, None, Label::Exact);
    report.quantity("discrete_max_gap_ratio", max_ratio, None, Label::Exact);
    report.check(sens.check("discrete_sensitivity"));
    if alpha.is_some() {
        report.check(product.check("product_risk_equals_marginal"));
        report.check(chain.check("discrete_sensitivity_chain"));
    }
    Ok(())
}

/// Exhaustive total-variation instances on supports of at most `max_atoms`
/// (capped at 4) atoms per factor.
pub fn discrete_tv_checks(cfg: &StudyConfig, report: &mut StudyReport) -> Result<()> {
    let seed = derive_seed(cfg.seed, TV_TAG);
    let size = cfg.max_atoms.min(4);
    let mut events = Worst::new();
    let mut contraction = Worst::new();
    let mut identity = Worst::new();
    let mut constant = Worst::new();
    let mut upper = Worst::new();
    let mut lower = Worst::new();
    let mut coupling = Worst::new();

    for t in 0..cfg.instances as u64 {
        let mut rng = sample_stream(seed, t);
        let m1 = rng.random_range(1..=size);
        let m2 = rng.random_range(1..=size);
        let (p1, q1) = (random_weights(&mut rng, m1), random_weights(&mut rng, m1));
        let (p2, q2) = (random_weights(&mut rng, m2), random_weights(&mut rng, m2));
        let tv1 = tv_discrete(&p1, &q1)?;
        let tv2 = tv_discrete(&p2, &q2)?;
        let pp = crate::metrics::product_weights(&p1, &p2);
        let qq = crate::metrics::product_weights(&q1, &q2);
        let tvp = tv_product(&p1, &p2, &q1, &q2)?;

        events.push((tv_by_events(&p1, &q1)? - tv1).abs(), 0.0, EXACT_TOL);
        events.push((tv_by_events(&pp, &qq)? - tvp).abs(), 0.0, EXACT_TOL);

        // maps on the first factor and on the product space
        for (p, q, tv) in [(&p1, &q1, tv1), (&pp, &qq, tvp)] {
            let cells = rng.random_range(1..=size);
            let map: Vec<usize> = (0..p.len()).map(|_| rng.random_range(0..cells)).collect();
            let tp = pushforward_weights(p, &map, cells)?;
            let tq = pushforward_weights(q, &map, cells)?;
            contraction.push(tv_discrete(&tp, &tq)?, tv, EXACT_TOL);

            let id: Vec<usize> = (0..p.len()).collect();
            let ip = pushforward_weights(p, &id, p.len())?;
            let iq = pushforward_weights(q, &id, p.len())?;
            identity.push((tv_discrete(&ip, &iq)? - tv).abs(), 0.0, EXACT_TOL);

            let c = vec![0; p.len()];
            let cp = pushforward_weights(p, &c, 1)?;
            let cq = pushforward_weights(q, &c, 1)?;
            constant.push(tv_discrete(&cp, &cq)?, 0.0, EXACT_TOL);

            // TV as the smallest mismatch probability over couplings
            let n = p.len();
            let cost = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
            let (mismatch, _) = transport_lp(p, q, &cost)?;
            coupling.push((mismatch - tv).abs(), 0.0, 1e-10);
        }

        upper.push(tvp, tv1 + tv2, EXACT_TOL);
        lower.push(tv1.max(tv2), tvp, EXACT_TOL);
    }

    report.quantity("tv_instances", cfg.instances as f64, None, Label::Exact);
    report.check(events.check("tv_events_equal_half_l1"));
    report.check(contraction.check("tv_contraction"));
    report.check(identity.check("tv_identity_equality"));
    report.check(constant.check("tv_constant_map_zero"));
    report.check(upper.check("tv_product_upper"));
    report.check(lower.check("tv_product_lower"));
    report.check(coupling.check("tv_coupling_characterisation"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::StudyKind;

    #[test]
    fn weights_are_probabilities() {
        let mut rng = sample_stream(1, 2);
        for n in 1..8 {
            let w = random_weights(&mut rng, n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(w.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn lipschitz_of_linear_map() {
        let obs = Observable { a: 0.0, b: 1.0, c: -0.7 };
        assert!((lipschitz_on(&[0.1, 0.5, 0.9], &obs) - 0.7).abs() < 1e-14);
        assert_eq!(lipschitz_on(&[0.3], &obs), 0.0);
    }

    #[test]
    fn tv_instances_pass() {
        let mut cfg = StudyConfig::with_defaults(StudyKind::Tv);
        cfg.instances = 50;
        let mut r = StudyReport::new(cfg.clone());
        discrete_tv_checks(&cfg, &mut r).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn risk_instances_pass() {
        let mut cfg = StudyConfig::with_defaults(StudyKind::Risk);
        cfg.instances = 50;
        cfg.max_atoms = 8;
        cfg.p = 1.0;
        let mut r = StudyReport::new(cfg.clone());
        discrete_risk_checks(&cfg, &mut r).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.get("discrete_violations").unwrap().value, 0.0);
    }
}
