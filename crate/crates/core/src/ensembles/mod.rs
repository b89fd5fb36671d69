//! Entry laws, factor samplers and moment checks.

mod distribution;
mod rng;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use distribution::{
    gaussian_matching_discrete, symmetrize, Admissibility, EntryDistribution, EntryLaw, MixedMoments,
    MomentProfile, DISTRIBUTION_NAMES, MAX_DEGREE,
};
pub use rng::SeedStream;

use crate::error::{Error, Result};
use crate::linearization::FactorChain;
use crate::numerics::ComplexMatrix;

/// Chooses the palette index for entry `(k, i, j)` (factor index 1-based, rows/cols 0-based).
pub type EntryPattern = Arc<dyn Fn(usize, usize, usize) -> usize + Send + Sync>;

/// How entry laws are assigned to `(k, i, j)`.
#[derive(Clone)]
pub enum Assignment {
    Constant(EntryDistribution),
    PerFactor(Vec<EntryDistribution>),
    PerEntry { palette: Vec<EntryDistribution>, pattern: EntryPattern },
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Constant(d) => f.debug_tuple("Constant").field(&d.name).finish(),
            Assignment::PerFactor(ds) => {
                f.debug_tuple("PerFactor").field(&ds.iter().map(|d| d.name.as_str()).collect::<Vec<_>>()).finish()
            }
            Assignment::PerEntry { palette, .. } => f
                .debug_struct("PerEntry")
                .field("palette", &palette.iter().map(|d| d.name.as_str()).collect::<Vec<_>>())
                .finish_non_exhaustive(),
        }
    }
}

impl Assignment {
    fn palette(&self) -> &[EntryDistribution] {
        match self {
            Assignment::Constant(d) => std::slice::from_ref(d),
            Assignment::PerFactor(ds) => ds,
            Assignment::PerEntry { palette, .. } => palette,
        }
    }

    fn law_for(&self, k: usize, i: usize, j: usize) -> &EntryDistribution {
        match self {
            Assignment::Constant(d) => d,
            Assignment::PerFactor(ds) => &ds[k - 1],
            Assignment::PerEntry { palette, pattern } => &palette[pattern(k, i, j) % palette.len()],
        }
    }
}

/// `M` independent `n x n` factors with independent entries.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    n: usize,
    m: usize,
    assignment: Assignment,
}

impl EnsembleSpec {
    /// Validated spec: every law in the assignment must pass `admissibility`.
    pub fn new(n: usize, m: usize, assignment: Assignment, admissibility: Admissibility) -> Result<Self> {
        let spec = Self::unchecked(n, m, assignment)?;
        for d in spec.assignment.palette() {
            admissibility.check(d)?;
        }
        Ok(spec)
    }

    /// Same as [`EnsembleSpec::new`] with default admissibility constants.
    pub fn iid(n: usize, m: usize, dist: EntryDistribution) -> Result<Self> {
        Self::new(n, m, Assignment::Constant(dist), Admissibility::default())
    }

    /// Skips admissibility checks (shape checks remain). For negative controls.
    pub fn unchecked(n: usize, m: usize, assignment: Assignment) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("need n >= 1 and M >= 1, got n = {n}, M = {m}")));
        }
        match &assignment {
            Assignment::PerFactor(ds) if ds.len() != m => {
                return Err(Error::InvalidParameter(format!("{} per-factor laws for M = {m}", ds.len())))
            }
            Assignment::PerEntry { palette, .. } if palette.is_empty() => {
                return Err(Error::InvalidParameter("empty palette".into()))
            }
            _ => {}
        }
        Ok(Self { n, m, assignment })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    /// Same assignment at a different size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::unchecked(n, self.m, self.assignment.clone())
    }
}

/// Factor `k` (1-based). Entry `(i, j)` draws from its own substream `stream/k/i/j`.
pub fn sample_factor(spec: &EnsembleSpec, k: usize, stream: SeedStream) -> Result<ComplexMatrix> {
    if k == 0 || k > spec.m {
        return Err(Error::IndexOutOfRange { index: k, max: spec.m });
    }
    let n = spec.n;
    let factor = stream.child(k as u64);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        let row = factor.child(i as u64);
        for j in 0..n {
            let mut rng = row.child(j as u64).rng();
            entries.push(spec.assignment.law_for(k, i, j).sample(&mut rng));
        }
    }
    ComplexMatrix::from_row_major(n, n, entries)
}

/// Anything that produces a factor chain from a seed stream.
pub trait ChainSource: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn sample_chain(&self, stream: SeedStream) -> Result<FactorChain>;
}

impl ChainSource for EnsembleSpec {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.m
    }

    fn sample_chain(&self, stream: SeedStream) -> Result<FactorChain> {
        let factors = (1..=self.m).map(|k| sample_factor(self, k, stream)).collect::<Result<Vec<_>>>()?;
        FactorChain::new(factors)
    }
}

/// A deterministic chain ignores the stream.
impl ChainSource for FactorChain {
    fn n(&self) -> usize {
        self.n()
    }

    fn m(&self) -> usize {
        self.m()
    }

    fn sample_chain(&self, _stream: SeedStream) -> Result<FactorChain> {
        Ok(self.clone())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentCheck {
    pub moment: &'static str,
    pub declared: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub distribution: String,
    pub samples: usize,
    pub tolerance_sigmas: f64,
    pub checks: Vec<MomentCheck>,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, moment: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.moment == moment)
    }
}

/// Empirical versus declared moments, each with its standard error.
pub fn verify_moments(
    d: &EntryDistribution,
    samples: usize,
    tolerance_sigmas: f64,
    stream: SeedStream,
) -> Result<MomentReport> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!("need at least 10^4 samples, got {samples}")));
    }
    // Welford accumulators for each scalar statistic.
    const NAMES: [&str; 6] = ["mean.re", "mean.im", "second_abs", "fourth_abs", "pseudo_second.re", "pseudo_second.im"];
    let mut mean = [0.0f64; 6];
    let mut m2 = [0.0f64; 6];
    let mut rng = stream.rng();
    for t in 0..samples {
        let x: Complex64 = d.sample(&mut rng);
        let a2 = x.norm_sqr();
        let sq = x * x;
        let vals = [x.re, x.im, a2, a2 * a2, sq.re, sq.im];
        let count = (t + 1) as f64;
        for k in 0..6 {
            let delta = vals[k] - mean[k];
            mean[k] += delta / count;
            m2[k] += delta * (vals[k] - mean[k]);
        }
    }
    let p = &d.profile;
    let declared = [p.mean.re, p.mean.im, p.second_abs, p.fourth_abs, p.pseudo_second.re, p.pseudo_second.im];
    let nf = samples as f64;
    let checks = (0..6)
        .map(|k| {
            let se = (m2[k] / (nf - 1.0)).max(0.0).sqrt() / nf.sqrt();
            let slack = tolerance_sigmas * se + 1e-12 * declared[k].abs().max(1.0);
            MomentCheck {
                moment: NAMES[k],
                declared: declared[k],
                empirical: mean[k],
                standard_error: se,
                passed: (mean[k] - declared[k]).abs() <= slack,
            }
        })
        .collect();
    Ok(MomentReport { distribution: d.name.clone(), samples, tolerance_sigmas, checks })
}
