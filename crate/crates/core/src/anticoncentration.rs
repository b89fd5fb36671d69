//! Small-ball estimates: the symmetrized magnitude window, Levy concentration of a sample,
//! and the image events `||Y(z)u - w|| <= c sqrt(n)` and the iterated chain image.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{symmetrize, ChainSource, EntryDistribution, SeedStream};
use crate::error::{Error, Result};
use crate::linearization::{BlockVector, TranslatedLinearization};

pub const MIN_WINDOW_SAMPLES: usize = 10_000;
pub const MIN_IMAGE_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcentrationEstimate {
    pub radius: f64,
    pub sup_probability: f64,
    pub samples: usize,
    /// `sqrt(p (1 - p) / samples)` at the reported probability.
    pub standard_error: f64,
    /// For Levy estimates: the supremum over all centers at `radius` is at most the estimate
    /// at `radius + discretization`. Zero for plain event frequencies.
    pub discretization: f64,
}

impl ConcentrationEstimate {
    fn from_count(radius: f64, hits: usize, samples: usize, discretization: f64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            radius,
            sup_probability: p,
            samples,
            standard_error: (p * (1.0 - p) / samples as f64).sqrt(),
            discretization,
        }
    }

    /// Associative merge of two frequency estimates over disjoint samples.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.radius != other.radius || self.discretization != 0.0 || other.discretization != 0.0 {
            return Err(Error::InvalidParameter("only frequency estimates at equal radius merge".into()));
        }
        let hits = (self.sup_probability * self.samples as f64).round() + (other.sup_probability * other.samples as f64).round();
        Ok(Self::from_count(self.radius, hits as usize, self.samples + other.samples, 0.0))
    }
}

fn check_window(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("window constant must lie in (0, 1], got {c}")));
    }
    Ok(())
}

fn in_window(x: Complex64, c: f64) -> bool {
    let r = x.norm();
    c <= r && r <= 1.0 / c
}

/// Empirical `P(c <= |xi~| <= 1/c)` for the symmetrization `xi~ = xi - xi'`.
pub fn window_probability(d: &EntryDistribution, c: f64, samples: usize, stream: SeedStream) -> Result<ConcentrationEstimate> {
    check_window(c)?;
    if samples < MIN_WINDOW_SAMPLES {
        return Err(Error::InvalidParameter(format!("at least {MIN_WINDOW_SAMPLES} samples required, got {samples}")));
    }
    let sym = symmetrize(d);
    let mut rng = stream.rng();
    let hits = (0..samples).filter(|_| in_window(sym.sample(&mut rng), c)).count();
    Ok(ConcentrationEstimate::from_count(c, hits, samples, 0.0))
}

/// Exact window probability for finitely supported laws.
pub fn window_probability_exact(d: &EntryDistribution, c: f64) -> Result<Option<f64>> {
    check_window(c)?;
    Ok(symmetrize(d).law.atoms().map(|atoms| atoms.iter().filter(|(x, _)| in_window(*x, c)).map(|(_, p)| p).sum()))
}

/// `max_w (1/N) #{j : |S_j - w| <= t}` with `w` ranging over the sample points.
///
/// Centering on data keeps the estimate monotone in `t`. The supremum over all centers at
/// radius `t` is bounded by the estimate at `2t`, reported as `discretization = t`.
pub fn levy_concentration(samples: &[Complex64], t: f64) -> Result<ConcentrationEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("Levy concentration needs a nonempty sample".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {t}")));
    }
    if let Some(bad) = samples.iter().find(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::Support { re: bad.re, im: bad.im });
    }
    let mut distinct: HashMap<(u64, u64), (Complex64, usize)> = HashMap::new();
    for s in samples {
        distinct.entry((s.re.to_bits(), s.im.to_bits())).or_insert((*s, 0)).1 += 1;
    }
    let cell = |x: Complex64| ((x.re / t).floor() as i64, (x.im / t).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<(Complex64, usize)>> = HashMap::new();
    for &(x, count) in distinct.values() {
        grid.entry(cell(x)).or_default().push((x, count));
    }
    let mut best = 0;
    for &(x, _) in distinct.values() {
        let (ci, cj) = cell(x);
        let mut total = 0;
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(pts) = grid.get(&(ci + di, cj + dj)) {
                    total += pts.iter().filter(|(y, _)| (x - y).norm() <= t).map(|(_, c)| c).sum::<usize>();
                }
            }
        }
        best = best.max(total);
    }
    Ok(ConcentrationEstimate::from_count(t, best, samples.len(), t))
}

/// Two-interleaved-grid variant: centers at `t Z^2` and `t (Z + 1/2)^2`, counting samples
/// within `t` of each center. Every point of the plane is within `t/2` of some center.
pub fn levy_concentration_grid(samples: &[Complex64], t: f64) -> Result<ConcentrationEstimate> {
    if samples.is_empty() || !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter("Levy concentration needs a nonempty sample and t > 0".into()));
    }
    let mut counts: HashMap<(i64, i64, bool), usize> = HashMap::new();
    for s in samples {
        for shifted in [false, true] {
            let off = if shifted { 0.5 } else { 0.0 };
            let (i0, j0) = ((s.re / t - off).round() as i64, (s.im / t - off).round() as i64);
            for i in i0 - 1..=i0 + 1 {
                for j in j0 - 1..=j0 + 1 {
                    let center = Complex64::new((i as f64 + off) * t, (j as f64 + off) * t);
                    if (s - center).norm() <= t {
                        *counts.entry((i, j, shifted)).or_default() += 1;
                    }
                }
            }
        }
    }
    let best = counts.values().copied().max().unwrap_or(0);
    Ok(ConcentrationEstimate::from_count(t, best, samples.len(), t / 2.0))
}

/// Result of the image small-ball experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageEstimate {
    pub estimate: ConcentrationEstimate,
    /// `c` in the event `||Y(z)u - w|| <= c sqrt(n)`.
    pub c: f64,
    /// Empirical quantiles `(level, value)` of `||Y(z)u - w|| / sqrt(n)`.
    pub quantiles: Vec<(f64, f64)>,
}

impl ImageEstimate {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|(l, _)| *l == level).map(|(_, v)| *v)
    }
}

/// Lower-order statistics reported by [`image_anticoncentration`].
pub const IMAGE_QUANTILES: [f64; 4] = [0.01, 0.05, 0.1, 0.5];

/// Empirical quantile by the nearest-rank rule on sorted data.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let idx = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// `P(||Y(z)u - w|| <= c sqrt(n))` over independent chains; trial `t` uses `stream.child(t)`.
pub fn image_anticoncentration<S: ChainSource>(
    source: &S,
    z: Complex64,
    u: &BlockVector,
    w: &BlockVector,
    c: f64,
    trials: usize,
    stream: SeedStream,
) -> Result<ImageEstimate> {
    let (m, n) = (source.m(), source.n());
    for v in [u, w] {
        if v.m() != m || v.n() != n {
            return Err(Error::Dimension(format!("block vector {}x{} for a chain {}x{}", v.m(), v.n(), m, n)));
        }
    }
    if trials < MIN_IMAGE_TRIALS {
        return Err(Error::InvalidParameter(format!("at least {MIN_IMAGE_TRIALS} trials required, got {trials}")));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("c must be non-negative, got {c}")));
    }
    let sqrt_n = (n as f64).sqrt();
    let mut values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let lin = TranslatedLinearization::new(source.sample_chain(stream.child(t))?, z);
            let img = lin.apply(u)?;
            let diff: f64 =
                img.to_flat().iter().zip(w.to_flat()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            Ok(diff / sqrt_n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = values.iter().filter(|&&v| v <= c).count();
    values.sort_by(f64::total_cmp);
    Ok(ImageEstimate {
        estimate: ConcentrationEstimate::from_count(c * sqrt_n, hits, trials, 0.0),
        c,
        quantiles: IMAGE_QUANTILES.iter().map(|&l| (l, empirical_quantile(&values, l))).collect(),
    })
}

/// `P(||(X_1/z) ... (X_{M-1}/z) e_n|| >= (c sqrt(n) / |z|)^{M-1})` over independent chains.
pub fn chain_image_norm_event<S: ChainSource>(
    source: &S,
    z: Complex64,
    c: f64,
    trials: usize,
    stream: SeedStream,
) -> Result<ConcentrationEstimate> {
    let (m, n) = (source.m(), source.n());
    if m < 2 {
        return Err(Error::InvalidParameter("the chain image event needs at least two factors".into()));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroShift);
    }
    if trials == 0 || !(c >= 0.0) {
        return Err(Error::InvalidParameter("need trials >= 1 and c >= 0".into()));
    }
    let threshold = (c * (n as f64).sqrt() / z.norm()).powi(m as i32 - 1);
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let chain = source.sample_chain(stream.child(t))?;
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            y[n - 1] = Complex64::new(1.0, 0.0);
            for k in (1..m).rev() {
                y = chain.factor(k).matvec(&y).into_iter().map(|x| x / z).collect();
            }
            Ok(crate::numerics::norm2(&y) >= threshold)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(ConcentrationEstimate::from_count(threshold, hits, trials, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EntryLaw, EnsembleSpec};
    use crate::linearization::FactorChain;

    fn rademacher() -> EntryDistribution {
        EntryDistribution::new("rademacher", EntryLaw::Rademacher)
    }

    #[test]
    fn rademacher_windows() {
        assert_eq!(window_probability_exact(&rademacher(), 1.0).unwrap(), Some(0.0));
        assert_eq!(window_probability_exact(&rademacher(), 0.5).unwrap(), Some(0.5));
        let est = window_probability(&rademacher(), 0.5, 20_000, SeedStream::new(3)).unwrap();
        assert!((est.sup_probability - 0.5).abs() < 4.0 * est.standard_error);
        assert!(window_probability(&rademacher(), 1.5, 20_000, SeedStream::new(3)).is_err());
        assert!(window_probability(&rademacher(), 0.5, 10, SeedStream::new(3)).is_err());
    }

    #[test]
    fn levy_point_mass_and_monotone() {
        let five = vec![Complex64::new(5.0, 0.0); 50];
        assert_eq!(levy_concentration(&five, 0.01).unwrap().sup_probability, 1.0);
        assert_eq!(levy_concentration_grid(&five, 0.01).unwrap().sup_probability, 1.0);
        let pts: Vec<Complex64> = (0..40).map(|k| Complex64::new((k * k % 17) as f64 * 0.1, k as f64 * 0.01)).collect();
        let mut prev = 0.0;
        for t in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0] {
            let p = levy_concentration(&pts, t).unwrap().sup_probability;
            assert!(p >= prev);
            prev = p;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn deterministic_chain_event() {
        let n = 9;
        let chain = FactorChain::identities(n, 2);
        let z = Complex64::new(3.0, 0.0);
        let est = chain_image_norm_event(&chain, z, 0.5, 10, SeedStream::new(0)).unwrap();
        assert_eq!(est.sup_probability, 0.0);
        let est = chain_image_norm_event(&chain, z, 0.0, 10, SeedStream::new(0)).unwrap();
        assert_eq!(est.sup_probability, 1.0);
        assert!(chain_image_norm_event(&FactorChain::identities(3, 1), z, 0.5, 10, SeedStream::new(0)).is_err());
    }

    #[test]
    fn vacuous_image_threshold() {
        let spec = EnsembleSpec::iid(4, 2, EntryDistribution::ginibre()).unwrap();
        let mut flat = vec![Complex64::new(0.0, 0.0); 8];
        flat[0] = Complex64::new(1.0, 0.0);
        let u = BlockVector::from_flat(2, 4, &flat).unwrap();
        let w = BlockVector::zeros(2, 4);
        let est = image_anticoncentration(&spec, Complex64::new(2.0, 0.0), &u, &w, 1e3, 100, SeedStream::new(5)).unwrap();
        assert_eq!(est.estimate.sup_probability, 1.0);
        assert_eq!(est.quantiles.len(), IMAGE_QUANTILES.len());
    }

    #[test]
    fn merge_adds_counts() {
        let a = ConcentrationEstimate::from_count(1.0, 3, 10, 0.0);
        let b = ConcentrationEstimate::from_count(1.0, 7, 30, 0.0);
        assert_eq!(a.merge(&b).unwrap(), ConcentrationEstimate::from_count(1.0, 10, 40, 0.0));
    }
}
