//! Small Monte Carlo helpers.

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Jackknife standard error of `g(mean(xs))`.
pub fn jackknife_se_of_mean(xs: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = xs.iter().sum();
    let loo: Vec<f64> = xs.iter().map(|x| g((total - x) / (n - 1) as f64)).collect();
    let m = mean(&loo);
    let ss: f64 = loo.iter().map(|t| (t - m).powi(2)).sum();
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_identity_matches_classical_se() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let a = jackknife_se_of_mean(&xs, |m| m);
        let b = std_error(&xs);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
