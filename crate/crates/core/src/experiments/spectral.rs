//! Linear spectral statistics of the scaled product and radial eigenvalue histograms.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{self, BootstrapSummary};
use super::{ExperimentConfig, ExperimentKind};
use crate::ensembles::{ChainSource, SeedStream};
use crate::error::{Error, Result};
use crate::spectra::scaled_product_eigenvalues;

/// Test functions for the linear statistic.
///
/// The bump is `f(z) = exp(-1 / (1 - s^2))` for `|s| < 1` and `0` otherwise, where
/// `s = (2|z| - 1) / (1 - 2 tau0)`; it is smooth and supported in `tau0 < |z| < 1 - tau0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    Zero,
    /// `f(x + iy) = x`; not bulk supported, only usable through the unchecked evaluator.
    RealPart,
    RadialBump { tau0: f64 },
}

impl Default for TestFunction {
    fn default() -> Self {
        TestFunction::RadialBump { tau0: 0.2 }
    }
}

impl TestFunction {
    pub fn eval(&self, z: Complex64) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::RealPart => z.re,
            TestFunction::RadialBump { tau0 } => {
                let s = (2.0 * z.norm() - 1.0) / (1.0 - 2.0 * tau0);
                if s.abs() < 1.0 {
                    (-1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Inner edge of the required support annulus.
    pub fn tau0(&self) -> f64 {
        match *self {
            TestFunction::RadialBump { tau0 } => tau0,
            _ => 0.0,
        }
    }

    pub(super) fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::RadialBump { tau0 } if !(tau0 > 0.0 && tau0 < 0.5) => {
                Err(Error::InvalidParameter(format!("test_function.tau0 must lie in (0, 1/2), got {tau0}")))
            }
            _ => Ok(()),
        }
    }
}

/// The two terms of the limiting variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceTerms {
    /// `(1/4 pi) int_{|z|<1} |grad f|^2`.
    pub dirichlet: f64,
    /// `(1/2) sum_k |k| |f_k|^2` over the Fourier coefficients of `f` on the unit circle.
    pub boundary: f64,
}

impl VarianceTerms {
    pub fn total(&self) -> f64 {
        self.dirichlet + self.boundary
    }
}

/// Polar midpoint grid with `grid_resolution` radii and `4 grid_resolution` angles;
/// gradients by central differences with step `0.25 / grid_resolution`.
fn polar_points(grid_resolution: usize) -> impl Iterator<Item = (Complex64, f64)> {
    let nr = grid_resolution;
    let nt = 4 * nr;
    let (dr, dt) = (1.0 / nr as f64, TAU / nt as f64);
    (0..nr).flat_map(move |i| {
        let r = (i as f64 + 0.5) * dr;
        (0..nt).map(move |j| (Complex64::from_polar(r, (j as f64 + 0.5) * dt), r * dr * dt))
    })
}

fn circle_samples(f: &TestFunction, modes: usize) -> Vec<f64> {
    (0..modes).map(|j| f.eval(Complex64::from_polar(1.0, TAU * j as f64 / modes as f64))).collect()
}

/// Variance terms without the bulk-support check.
pub fn predicted_variance_terms(f: &TestFunction, grid_resolution: usize, fourier_modes: usize) -> Result<VarianceTerms> {
    if grid_resolution < 2 || fourier_modes < 4 {
        return Err(Error::InvalidParameter("need grid_resolution >= 2 and fourier_modes >= 4".into()));
    }
    if *f == TestFunction::Zero {
        return Ok(VarianceTerms { dirichlet: 0.0, boundary: 0.0 });
    }
    let h = 0.25 / grid_resolution as f64;
    let grad2 = |z: Complex64| {
        let dx = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
        let dy = (f.eval(z + Complex64::new(0.0, h)) - f.eval(z - Complex64::new(0.0, h))) / (2.0 * h);
        dx * dx + dy * dy
    };
    let dirichlet = polar_points(grid_resolution).map(|(z, w)| grad2(z) * w).sum::<f64>() / (4.0 * PI);

    let samples = circle_samples(f, fourier_modes);
    let k_max = fourier_modes as i64 / 2;
    let mut sum = 0.0;
    for k in (1 - k_max)..=k_max {
        if k == 0 {
            continue;
        }
        let c: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(j, &v)| v * Complex64::from_polar(1.0, -TAU * (k * j as i64) as f64 / fourier_modes as f64))
            .sum::<Complex64>()
            / fourier_modes as f64;
        sum += k.unsigned_abs() as f64 * c.norm_sqr();
    }
    Ok(VarianceTerms { dirichlet, boundary: 0.5 * sum })
}

/// Limiting variance without the bulk-support check (for test modes such as `RealPart`).
pub fn predicted_variance_unchecked(f: &TestFunction, grid_resolution: usize, fourier_modes: usize) -> Result<f64> {
    Ok(predicted_variance_terms(f, grid_resolution, fourier_modes)?.total())
}

/// Limiting variance of the centered linear statistic for a bulk-supported `f`.
///
/// Every grid and circle sample with `|z| <= tau0` or `|z| >= 1 - tau0` must evaluate to 0.
pub fn predicted_variance(f: &TestFunction, grid_resolution: usize, fourier_modes: usize) -> Result<f64> {
    f.validate()?;
    let tau0 = f.tau0();
    let circle = (0..fourier_modes).map(|j| Complex64::from_polar(1.0, TAU * j as f64 / fourier_modes as f64));
    for z in polar_points(grid_resolution).map(|(z, _)| z).chain(circle) {
        let r = z.norm();
        if (r <= tau0 || r >= 1.0 - tau0) && f.eval(z) != 0.0 {
            return Err(Error::Support { re: z.re, im: z.im });
        }
    }
    predicted_variance_unchecked(f, grid_resolution, fourier_modes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearStatisticRun {
    pub f: TestFunction,
    pub n: usize,
    pub m: usize,
    pub replicas: usize,
    pub excluded: usize,
    /// Centered samples `sum_j f(lambda_j) - mean`.
    pub values: Vec<f64>,
    /// Across-replica mean of `sum_j f(lambda_j)`.
    pub mean: f64,
    pub predicted_variance: f64,
    pub empirical_variance: f64,
    pub bootstrap: BootstrapSummary,
    /// Largest standardized QQ deviation from the normal quantiles.
    pub qq_deviation: f64,
}

impl LinearStatisticRun {
    pub fn relative_error(&self) -> f64 {
        (self.empirical_variance - self.predicted_variance).abs() / self.predicted_variance
    }
}

/// `N_n[f]` over independent replicas; replica `r` samples from `stream.child(r)`.
pub fn linear_statistic<S: ChainSource>(
    source: &S,
    f: &TestFunction,
    replicas: usize,
    predicted: f64,
    bootstrap: usize,
    stream: SeedStream,
) -> Result<LinearStatisticRun> {
    if replicas < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replicas, got {replicas}")));
    }
    let sums: Vec<Option<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let chain = source.sample_chain(stream.child(r)).ok()?;
            let eig = scaled_product_eigenvalues(&chain).ok()?;
            Some(eig.iter().map(|&l| f.eval(l)).sum())
        })
        .collect();
    let raw: Vec<f64> = sums.iter().flatten().copied().collect();
    if raw.len() < 2 {
        return Err(Error::FailureBudget { excluded: replicas - raw.len(), total: replicas });
    }
    let mean = stats::mean(&raw);
    let values: Vec<f64> = raw.iter().map(|s| s - mean).collect();
    Ok(LinearStatisticRun {
        f: *f,
        n: source.n(),
        m: source.m(),
        replicas,
        excluded: replicas - raw.len(),
        empirical_variance: stats::sample_variance(&values),
        bootstrap: stats::bootstrap_variance(&values, bootstrap, stream.child(u64::MAX)),
        qq_deviation: stats::qq_deviation(&values),
        values,
        mean,
        predicted_variance: predicted,
    })
}

/// Linear statistic at `n = n_grid[0]` with `trials` replicas.
pub fn run_linear_statistic(cfg: &ExperimentConfig, f: &TestFunction) -> Result<LinearStatisticRun> {
    cfg.validate()?;
    let n = cfg.n_grid[0];
    let predicted = match f {
        TestFunction::RealPart => predicted_variance_unchecked(f, cfg.variance.grid_resolution, cfg.variance.fourier_modes)?,
        _ => predicted_variance(f, cfg.variance.grid_resolution, cfg.variance.fourier_modes)?,
    };
    let stream = SeedStream::new(cfg.seed).path(&[ExperimentKind::LinearStatistic as u64, n as u64]);
    linear_statistic(&cfg.ensemble(n)?, f, cfg.trials, predicted, cfg.variance.bootstrap, stream)
}

/// Radial counts of eigenvalues of `n^{-M/2} X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialHistogram {
    pub n: usize,
    pub m: usize,
    pub replicas: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Eigenvalues with modulus above the last edge.
    pub overflow: usize,
    pub total: usize,
}

impl RadialHistogram {
    /// Fraction of eigenvalues with modulus at most `r` (bin resolution).
    pub fn mass_within(&self, r: f64) -> f64 {
        let inside: usize = self.counts.iter().zip(self.edges.windows(2)).filter(|(_, e)| e[1] <= r + 1e-12).map(|(c, _)| c).sum();
        inside as f64 / self.total.max(1) as f64
    }
}

pub fn radial_histogram<S: ChainSource>(
    source: &S,
    replicas: usize,
    bins: usize,
    max_radius: f64,
    stream: SeedStream,
) -> Result<RadialHistogram> {
    if bins == 0 || !(max_radius > 0.0) || replicas == 0 {
        return Err(Error::InvalidParameter("need bins >= 1, max_radius > 0 and replicas >= 1".into()));
    }
    let radii: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let eig = scaled_product_eigenvalues(&source.sample_chain(stream.child(r))?)?;
            Ok(eig.iter().map(|l| l.norm()).collect())
        })
        .collect::<Result<_>>()?;
    let width = max_radius / bins as f64;
    let mut counts = vec![0; bins];
    let mut overflow = 0;
    let mut total = 0;
    for r in radii.iter().flatten() {
        total += 1;
        if *r > max_radius {
            overflow += 1;
        } else {
            counts[((r / width) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(RadialHistogram {
        n: source.n(),
        m: source.m(),
        replicas,
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        counts,
        overflow,
        total,
    })
}

/// Histogram at `n = n_grid[0]` with `trials` replicas.
pub fn circular_law_histogram(cfg: &ExperimentConfig) -> Result<RadialHistogram> {
    cfg.validate()?;
    let n = cfg.n_grid[0];
    let stream = SeedStream::new(cfg.seed).path(&[ExperimentKind::Histogram as u64, n as u64]);
    radial_histogram(&cfg.ensemble(n)?, cfg.trials, cfg.histogram.bins, cfg.histogram.max_radius, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::FactorChain;

    #[test]
    fn zero_function() {
        assert_eq!(predicted_variance(&TestFunction::Zero, 50, 64).unwrap(), 0.0);
        let chain = FactorChain::identities(3, 1);
        let run = linear_statistic(&chain, &TestFunction::Zero, 5, 0.0, 10, SeedStream::new(0)).unwrap();
        assert!(run.values.iter().all(|&v| v == 0.0) && run.empirical_variance == 0.0);
    }

    #[test]
    fn real_part_spot_value() {
        let t = predicted_variance_terms(&TestFunction::RealPart, 100, 64).unwrap();
        assert!((t.dirichlet - 0.25).abs() < 1e-9, "{}", t.dirichlet);
        assert!((t.boundary - 0.25).abs() < 1e-12);
        assert!(matches!(predicted_variance(&TestFunction::RealPart, 100, 64), Err(Error::Support { .. })));
    }

    #[test]
    fn identity_histogram_single_bin() {
        let chain = FactorChain::identities(4, 2);
        let h = radial_histogram(&chain, 2, 8, 1.0, SeedStream::new(0)).unwrap();
        assert_eq!(h.total, 8);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts[2], 8); // radius 1/4 with width 1/8
    }
}
