//! Statistical verification helpers: Kolmogorov–Smirnov tests (one- and
//! two-sample, optionally weighted), monotone-trend summaries and basic
//! moment/confidence machinery used throughout the experiment suite.

use crate::error::{CoreError, Result};
use alloc::vec::Vec;

/// Outcome of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    /// Sup-distance between the empirical and reference cdf.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

/// Kolmogorov distribution tail Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = libm::exp(-2.0 * (k * k) as f64 * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = libm::sqrt(n_eff);
    kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)
}

fn sort_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidArgument("non-finite sample"));
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    Ok(xs)
}

/// One-sample KS test of `samples` against the reference cdf.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsOutcome> {
    if samples.len() < 20 {
        return Err(CoreError::InvalidArgument("ks_test needs at least 20 samples"));
    }
    let xs = sort_finite(samples)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(KsOutcome { statistic: d, p_value: ks_p_value(d, n), n_eff: n })
}

/// Weighted one-sample KS test: the empirical cdf weights sample i by
/// `weights[i]` (self-normalized). The p-value uses the effective sample size
/// (Σw)²/Σw², which must be reported alongside.
pub fn ks_test_weighted<F: Fn(f64) -> f64>(
    samples: &[f64],
    weights: &[f64],
    cdf: F,
) -> Result<KsOutcome> {
    if samples.len() != weights.len() {
        return Err(CoreError::InvalidArgument("weights length mismatch"));
    }
    if samples.len() < 20 {
        return Err(CoreError::InvalidArgument("ks_test needs at least 20 samples"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CoreError::InvalidArgument("weights must be finite and non-negative"));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(CoreError::InvalidArgument("all weights are zero"));
    }
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidArgument("non-finite sample"));
    }
    idx.sort_unstable_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let w2sum: f64 = weights.iter().map(|w| w * w).sum();
    let n_eff = wsum * wsum / w2sum;
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for &i in &idx {
        let f = cdf(samples[i]).clamp(0.0, 1.0);
        d = d.max((f - acc / wsum).abs());
        acc += weights[i];
        d = d.max((acc / wsum - f).abs());
    }
    Ok(KsOutcome { statistic: d, p_value: ks_p_value(d, n_eff), n_eff })
}

/// Two-sample KS test.
pub fn ks_test_two_sample(a: &[f64], b: &[f64]) -> Result<KsOutcome> {
    if a.len() < 20 || b.len() < 20 {
        return Err(CoreError::InvalidArgument("ks_test needs at least 20 samples per side"));
    }
    let xs = sort_finite(a)?;
    let ys = sort_finite(b)?;
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let (x, y) = (xs[i], ys[j]);
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsOutcome { statistic: d, p_value: ks_p_value(d, n_eff), n_eff })
}

/// Trend summary of a statistic along a parameter ladder: least-squares slope
/// against the ladder index and the fraction of adjacent strict decreases.
pub fn trend_test(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean_x = (nf - 1.0) / 2.0;
    let mean_y = values.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let dec = values.windows(2).filter(|w| w[1] < w[0]).count();
    (slope, dec as f64 / (n - 1) as f64)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    libm::sqrt(variance(xs) / xs.len() as f64)
}

/// Median (by total order); the slice is copied.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Effective sample size (Σw)²/Σw² of a weight vector.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Ordinary least-squares fit y = a·x + b; returns (a, b).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_cdf;
    use crate::rng::RngStream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ks_exact_cdf_small_statistic() {
        // empirical cdf equal to reference at all sample points -> D <= 1/n
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let out = ks_test(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(out.statistic <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_detects_mean_shift() {
        let mut rng = RngStream::new(1, 0).rng();
        let samples: Vec<f64> = (0..1000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                1.0 + z
            })
            .collect();
        let out = ks_test(&samples, normal_cdf).unwrap();
        assert!(out.p_value < 1e-6, "p = {}", out.p_value);
    }

    #[test]
    fn ks_null_p_values_uniform() {
        // fraction of p < 0.05 over repeated null runs should be ~0.05
        let mut rejections = 0;
        let runs = 1000;
        for r in 0..runs {
            let mut rng = RngStream::new(5, r).rng();
            let samples: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
            let out = ks_test(&samples, normal_cdf).unwrap();
            if out.p_value < 0.05 {
                rejections += 1;
            }
        }
        let frac = rejections as f64 / runs as f64;
        assert!((frac - 0.05).abs() < 0.02, "rejection fraction {frac}");
    }

    #[test]
    fn ks_two_sample_null_calibration() {
        // under the null the rejection rate at 5% should be ~5%
        let runs = 400;
        let mut rejections = 0;
        for r in 0..runs {
            let mut rng = RngStream::new(2, r).rng();
            let a: Vec<f64> = (0..150).map(|_| StandardNormal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..180).map(|_| StandardNormal.sample(&mut rng)).collect();
            let out = ks_test_two_sample(&a, &b).unwrap();
            if out.p_value < 0.05 {
                rejections += 1;
            }
        }
        let frac = rejections as f64 / runs as f64;
        assert!((frac - 0.05).abs() < 0.035, "two-sample null rejection fraction {frac}");
    }

    #[test]
    fn ks_rejects_too_few_samples() {
        let xs = [0.5; 10];
        assert!(matches!(ks_test(&xs, |x| x), Err(CoreError::InvalidArgument(_))));
    }

    #[test]
    fn trend_constant_and_decreasing() {
        let (slope, frac) = trend_test(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(slope, 0.0);
        assert_eq!(frac, 0.0);
        let (slope, frac) = trend_test(&[4.0, 3.0, 2.0, 1.0]);
        assert!(slope < 0.0);
        assert_eq!(frac, 1.0);
    }

    #[test]
    fn weighted_ks_matches_unweighted_for_unit_weights() {
        let mut rng = RngStream::new(3, 0).rng();
        let samples: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = vec![1.0; samples.len()];
        let a = ks_test(&samples, normal_cdf).unwrap();
        let b = ks_test_weighted(&samples, &w, normal_cdf).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
        assert!((a.p_value - b.p_value).abs() < 1e-12);
    }
}
