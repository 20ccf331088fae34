//! Binomial summaries for Monte Carlo rates.

/// Standard deviation of the mean of `trials` Bernoulli(`p`) draws.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `(rate - p0) / σ(p0)`; `None` when the null variance is zero and the rate
/// differs from `p0`.
pub fn z_score(successes: u64, trials: u64, p0: f64) -> Option<f64> {
    let rate = successes as f64 / trials as f64;
    let sigma = binomial_sigma(p0, trials);
    if sigma == 0.0 {
        return (rate == p0).then_some(0.0);
    }
    Some((rate - p0) / sigma)
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Whether `rate` lies within `k` binomial standard deviations of `expected`.
pub fn within_sigmas(rate: f64, expected: f64, trials: u64, k: f64) -> bool {
    (rate - expected).abs() <= k * binomial_sigma(expected, trials) + 1e-12
}
