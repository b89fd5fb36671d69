//! Small statistical helpers for the Monte Carlo drivers.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ensembles::SeedStream;

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (zero for fewer than two values).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Nearest-rank quantile of unsorted data.
pub fn quantile(xs: &[f64], level: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    crate::anticoncentration::empirical_quantile(&s, level)
}

/// Percentile bootstrap of the sample variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn bootstrap_variance(xs: &[f64], resamples: usize, stream: SeedStream) -> BootstrapSummary {
    let mut rng = stream.rng();
    let n = xs.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let s: Vec<f64> = (0..n).map(|_| xs[rng.gen_range(0..n)]).collect();
            sample_variance(&s)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    BootstrapSummary {
        resamples,
        standard_error: sample_variance(&stats).sqrt(),
        ci_low: crate::anticoncentration::empirical_quantile(&stats, 0.025),
        ci_high: crate::anticoncentration::empirical_quantile(&stats, 0.975),
    }
}

/// `max_i |x_(i)/s - Phi^{-1}((i + 1/2)/N)|` for the standardized order statistics.
pub fn qq_deviation(xs: &[f64]) -> f64 {
    let sd = sample_variance(xs).sqrt();
    if xs.len() < 2 || sd == 0.0 {
        return 0.0;
    }
    let m = mean(xs);
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, v)| (v - normal.inverse_cdf((i as f64 + 0.5) / n)).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}
