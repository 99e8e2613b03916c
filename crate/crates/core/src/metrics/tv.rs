use super::measure::{check_probability, product_weights};
use crate::error::{invalid, Result};

/// Total variation `sup_A |P(A) - Q(A)| = (1/2) sum_i |p_i - q_i|` on a shared
/// finite support.
pub fn tv_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return invalid(format!("supports differ: {} vs {} atoms", p.len(), q.len()));
    }
    check_probability(p, "P")?;
    check_probability(q, "Q")?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `max_A |P(A) - Q(A)|` by enumerating all `2^n` events. Exponential; meant
/// as an independent check on small supports.
pub fn tv_by_events(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return invalid(format!("supports differ: {} vs {} atoms", p.len(), q.len()));
    }
    if p.len() > 20 {
        return invalid("event enumeration is limited to 20 atoms");
    }
    let mut best = 0.0f64;
    for mask in 0u32..(1 << p.len()) {
        let gap: f64 = (0..p.len()).filter(|i| mask & (1 << i) != 0).map(|i| p[i] - q[i]).sum();
        best = best.max(gap.abs());
    }
    Ok(best)
}

/// `TV(P1 x P2, Q1 x Q2)`.
pub fn tv_product(p1: &[f64], p2: &[f64], q1: &[f64], q2: &[f64]) -> Result<f64> {
    tv_discrete(&product_weights(p1, p2), &product_weights(q1, q2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(tv_discrete(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_discrete(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.1, 0.9]).unwrap(), 1.0);
        assert!((tv_discrete(&[0.5, 0.5], &[0.8, 0.2]).unwrap() - 0.3).abs() < 1e-15);
        assert!((tv_by_events(&[0.5, 0.5], &[0.8, 0.2]).unwrap() - 0.3).abs() < 1e-15);
        assert!(tv_discrete(&[1.0], &[0.5, 0.5]).is_err());
    }
}
