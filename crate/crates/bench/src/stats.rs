//! Small statistics helpers shared by the reports and the verification suite.

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Total-variation distance between two distributions on the same support.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "distributions over different supports");
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Expected TV distance between `q` and the empirical distribution of `n`
/// exact draws from it, using `E|X - nq| ~ sqrt(2 n q (1-q) / pi)`.
pub fn tv_noise_floor(q: &[f64], n: usize) -> f64 {
    let n = n as f64;
    0.5 * q
        .iter()
        .map(|&x| (2.0 * x * (1.0 - x) / (std::f64::consts::PI * n)).sqrt())
        .sum::<f64>()
}

/// Wilson score interval for a binomial proportion at confidence `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let centre = (phat + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean and (n-1) standard deviation; the deviation is 0 for one value.
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
