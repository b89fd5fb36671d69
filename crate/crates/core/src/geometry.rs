//! Compressible and incompressible vectors, row distances, and null vectors of the
//! row-deleted linearization.

use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::ensembles::SeedStream;
use crate::error::{Error, Result};
use crate::linearization::{BlockVector, StructuredSolver, TranslatedLinearization};
use crate::numerics::{norm2, normalize, range_residual, right_singular_basis, row_span_distances, ComplexMatrix};

const UNIT_TOL: f64 = 1e-12;
/// Relative threshold on the second smallest singular value below which a null space is degenerate.
pub const NULLITY_TOL: f64 = 1e-9;

/// Sparsity fraction `a`, distance threshold `b` and ambient dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereParams {
    pub a: f64,
    pub b: f64,
    pub d: usize,
}

impl SphereParams {
    pub fn new(a: f64, b: f64, d: usize) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("a must lie in (0, 1), got {a}")));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!("b must lie in (0, 1), got {b}")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { a, b, d })
    }

    /// `a = 1/log n`, `b = n^{-epsilon}`.
    pub fn diagnostic_defaults(n: usize, epsilon: f64, d: usize) -> Result<Self> {
        Self::new(1.0 / (n as f64).ln(), (n as f64).powf(-epsilon), d)
    }

    pub fn support_size(&self) -> usize {
        sparse_support_size(self.a, self.d)
    }
}

/// `floor(a d)`, with a small guard so that products like `(1/3) * 6` count as exact.
pub fn sparse_support_size(a: f64, d: usize) -> usize {
    ((a * d as f64) + 1e-9).floor().max(0.0) as usize
}

fn check_unit(v: &[Complex64], tol: f64) -> Result<()> {
    let norm = norm2(v);
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotUnit { norm });
    }
    Ok(())
}

/// Indices of the `k` largest magnitudes; ties go to the lower index.
fn top_k(v: &[Complex64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].norm_sqr().total_cmp(&v[i].norm_sqr()).then(i.cmp(&j)));
    idx.truncate(k);
    idx
}

/// Distance from a unit vector to the set of vectors supported on at most `floor(a d)` coordinates.
pub fn dist_to_sparse(v: &[Complex64], a: f64) -> Result<f64> {
    check_unit(v, UNIT_TOL)?;
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let k = sparse_support_size(a, v.len()).min(v.len());
    let mut keep = vec![false; v.len()];
    for i in top_k(v, k) {
        keep[i] = true;
    }
    let tail: f64 = v.iter().zip(&keep).filter(|(_, &k)| !k).map(|(x, _)| x.norm_sqr()).sum();
    Ok(tail.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Compressible,
    Incompressible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereClassification {
    pub dist_to_sparse: f64,
    pub verdict: Verdict,
    pub params: SphereParams,
}

/// Compressible iff the distance to sparse vectors is at most `b`.
pub fn classify(v: &[Complex64], p: &SphereParams) -> Result<SphereClassification> {
    if v.len() != p.d {
        return Err(Error::Dimension(format!("vector of length {} for dimension {}", v.len(), p.d)));
    }
    let dist = dist_to_sparse(v, p.a)?;
    let verdict = if dist <= p.b { Verdict::Compressible } else { Verdict::Incompressible };
    Ok(SphereClassification { dist_to_sparse: dist, verdict, params: *p })
}

/// `log10` of `(c_net / (a b))^{2 a N}` without hypothesis checks.
pub fn net_cardinality_log10(a: f64, b: f64, big_n: usize, c_net: f64) -> f64 {
    2.0 * a * big_n as f64 * (c_net / (a * b)).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetBound {
    pub log10: f64,
    /// `None` when the value overflows `f64`.
    pub value: Option<f64>,
}

/// Cardinality bound for a `2b`-net of compressible vectors in dimension `big_n`.
pub fn net_cardinality_bound(p: &SphereParams, big_n: usize, c_net: f64) -> Result<NetBound> {
    for (name, x) in [("a", p.a), ("b", p.b)] {
        if !(x > 0.0 && x < 0.125) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1/8), got {x}")));
        }
    }
    if !(c_net > 0.0) {
        return Err(Error::InvalidParameter(format!("net constant must be positive, got {c_net}")));
    }
    let log10 = net_cardinality_log10(p.a, p.b, big_n, c_net);
    let value = 10f64.powf(log10);
    Ok(NetBound { log10, value: value.is_finite().then_some(value) })
}

/// Smallest constant `C` with `size <= (C / (a b))^{2 a d}`.
pub fn fit_net_constant(size: usize, p: &SphereParams) -> f64 {
    p.a * p.b * (size as f64).powf(1.0 / (2.0 * p.a * p.d as f64))
}

/// Largest sparse-sphere covering radius that still yields a `2b`-net of `Comp(a, b)`.
///
/// A compressible unit vector lies within `sqrt(2 - 2 sqrt(1 - b^2))` of the normalized
/// restriction to its top coordinates.
pub fn max_net_resolution(b: f64) -> f64 {
    2.0 * b - (2.0 - 2.0 * (1.0 - b * b).sqrt()).sqrt()
}

pub const NET_DIM_CAP: usize = 8;
pub const NET_SIZE_CAP: usize = 5_000_000;
const CERTIFY_PER_SUPPORT: usize = 256;

/// Product grid on the unit sphere of `C^k`: hyperspherical angles for the magnitudes and
/// independent phases, all at cell midpoints.
struct SphereGrid {
    k: usize,
    n_theta: usize,
    n_phi: usize,
}

impl SphereGrid {
    fn for_radius(k: usize, r: f64) -> Self {
        let half = r / std::f64::consts::SQRT_2;
        let n_theta = if k > 1 {
            (((k - 1) as f64).sqrt() * std::f64::consts::FRAC_PI_4 / half).ceil() as usize
        } else {
            1
        };
        let n_phi = (std::f64::consts::PI / half).ceil() as usize;
        Self { k, n_theta: n_theta.max(1), n_phi: n_phi.max(1) }
    }

    fn len(&self) -> Option<usize> {
        let t = self.n_theta.checked_pow((self.k - 1) as u32)?;
        t.checked_mul(self.n_phi.checked_pow(self.k as u32)?)
    }

    fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / self.n_theta as f64
    }

    fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * std::f64::consts::TAU / self.n_phi as f64
    }

    fn point(&self, thetas: &[usize], phis: &[usize]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.k);
        let mut s = 1.0;
        for i in 0..self.k {
            let c = if i + 1 < self.k {
                let t = self.theta(thetas[i]);
                let c = s * t.cos();
                s *= t.sin();
                c
            } else {
                s
            };
            out.push(Complex64::from_polar(c, self.phi(phis[i])));
        }
        out
    }

    /// Grid cell containing a unit vector of `C^k`.
    fn locate(&self, y: &[Complex64]) -> (Vec<usize>, Vec<usize>) {
        let mut thetas = Vec::with_capacity(self.k.saturating_sub(1));
        let mut rest: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &y[..self.k - 1] {
            let t = if rest > 0.0 { (c.norm() / rest).clamp(0.0, 1.0).acos() } else { 0.0 };
            rest = (rest * rest - c.norm_sqr()).max(0.0).sqrt();
            let j = (t / std::f64::consts::FRAC_PI_2 * self.n_theta as f64).floor() as usize;
            thetas.push(j.min(self.n_theta - 1));
        }
        let phis = y
            .iter()
            .map(|c| {
                let a = c.arg().rem_euclid(std::f64::consts::TAU);
                ((a / std::f64::consts::TAU * self.n_phi as f64).floor() as usize).min(self.n_phi - 1)
            })
            .collect();
        (thetas, phis)
    }

    fn points(&self) -> Vec<Vec<Complex64>> {
        let mut out = Vec::new();
        for t in odometer(self.k - 1, self.n_theta) {
            for p in odometer(self.k, self.n_phi) {
                out.push(self.point(&t, &p));
            }
        }
        out
    }
}

/// All `len`-tuples over `0..base` in lexicographic order (one empty tuple when `len == 0`).
fn odometer(len: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some(vec![0; len]);
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut succ = cur.clone();
        for i in (0..len).rev() {
            succ[i] += 1;
            if succ[i] < base {
                next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    })
}

/// A finite subset of `Comp_d(a, b)` within `2b` of every compressible unit vector.
///
/// Points are sparse unit vectors on a product grid over each support of size
/// `floor(a d)`, with covering radius `resolution` on each sparse sphere. Coverage is then
/// certified on a fresh sample of compressible vectors drawn from `stream`.
pub fn greedy_net(p: &SphereParams, resolution: f64, stream: SeedStream) -> Result<Vec<Vec<Complex64>>> {
    if !(p.b < 0.125) {
        return Err(Error::InvalidParameter(format!("b must lie in (0, 1/8), got {}", p.b)));
    }
    if p.d > NET_DIM_CAP {
        return Err(Error::CapExceeded { size: p.d, cap: NET_DIM_CAP });
    }
    let r_max = max_net_resolution(p.b);
    if !(resolution > 0.0 && resolution <= r_max) {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} too coarse to certify a {}-net (needs at most {r_max:.6})",
            2.0 * p.b
        )));
    }
    let k = p.support_size().min(p.d);
    if k == 0 {
        // Only the zero vector is 0-sparse, so no unit vector is compressible.
        return Ok(Vec::new());
    }
    let grid = SphereGrid::for_radius(k, resolution);
    let supports: Vec<Vec<usize>> = (0..p.d).combinations(k).collect();
    let per = grid.len().ok_or(Error::CapExceeded { size: usize::MAX, cap: NET_SIZE_CAP })?;
    let total = per.saturating_mul(supports.len());
    if total > NET_SIZE_CAP {
        return Err(Error::CapExceeded { size: total, cap: NET_SIZE_CAP });
    }
    let local = grid.points();
    let mut net = Vec::with_capacity(total);
    for s in &supports {
        for y in &local {
            let mut v = vec![Complex64::new(0.0, 0.0); p.d];
            for (&i, &c) in s.iter().zip(y) {
                v[i] = c;
            }
            net.push(v);
        }
    }

    let mut rng = stream.rng();
    for (si, s) in supports.iter().enumerate() {
        for _ in 0..CERTIFY_PER_SUPPORT {
            let x = sample_compressible(p, s, &mut rng);
            let dist = covering_distance(&x, k, &grid, &supports, &net, per);
            if dist > 2.0 * p.b {
                return Err(Error::InvalidParameter(format!(
                    "resolution {resolution} failed to cover a sample on support {si} (distance {dist:.6})"
                )));
            }
        }
    }
    Ok(net)
}

fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Unit vector `sqrt(1 - t^2) y + e` with `y` a random unit vector on `support` and `e`
/// off the support with `|e| = t <= b`.
fn sample_compressible<R: Rng>(p: &SphereParams, support: &[usize], rng: &mut R) -> Vec<Complex64> {
    let mut y: Vec<Complex64> = support.iter().map(|_| gaussian(rng)).collect();
    normalize(&mut y);
    let off: Vec<usize> = (0..p.d).filter(|i| !support.contains(i)).collect();
    let t = if off.is_empty() { 0.0 } else { p.b * rng.gen::<f64>() };
    let mut e: Vec<Complex64> = off.iter().map(|_| gaussian(rng)).collect();
    if !e.is_empty() {
        normalize(&mut e);
    }
    let mut x = vec![Complex64::new(0.0, 0.0); p.d];
    let s = (1.0 - t * t).sqrt();
    for (&i, c) in support.iter().zip(&y) {
        x[i] = c * s;
    }
    for (&i, c) in off.iter().zip(&e) {
        x[i] = c * t;
    }
    x
}

/// Distance from `x` to the grid point of the cell holding its normalized top-`k` restriction.
fn covering_distance(
    x: &[Complex64],
    k: usize,
    grid: &SphereGrid,
    supports: &[Vec<usize>],
    net: &[Vec<Complex64>],
    per: usize,
) -> f64 {
    let mut support = top_k(x, k);
    support.sort_unstable();
    let si = supports.binary_search(&support).expect("supports enumerate all k-subsets in order");
    let mut y: Vec<Complex64> = support.iter().map(|&i| x[i]).collect();
    normalize(&mut y);
    let (thetas, phis) = grid.locate(&y);
    let mut idx = 0;
    for &t in &thetas {
        idx = idx * grid.n_theta + t;
    }
    for &f in &phis {
        idx = idx * grid.n_phi + f;
    }
    let s = &net[si * per + idx];
    x.iter().zip(s).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// Distance from row `k` (0-based) to the span of the other rows.
pub fn row_distance(m: &ComplexMatrix, k: usize) -> Result<f64> {
    if k >= m.rows() {
        return Err(Error::IndexOutOfRange { index: k, max: m.rows().saturating_sub(1) });
    }
    let row = m.row(k);
    if m.rows() == 1 {
        return Ok(norm2(&row));
    }
    // Columns of `others^*` are the conjugated remaining rows.
    let others = m.without_row(k).adjoint();
    let target: Vec<Complex64> = row.iter().map(|c| c.conj()).collect();
    Ok(norm2(&range_residual(&others, &target)?))
}

/// All row distances: one QR when the rows are well conditioned, otherwise one projection per row.
pub fn row_distances(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.rows() > 1 {
        if let Some(d) = row_span_distances(m)? {
            return Ok(d);
        }
    }
    (0..m.rows()).map(|k| row_distance(m, k)).collect()
}

/// Unit null vector of `Y(z)` with one row removed.
#[derive(Clone, Debug, PartialEq)]
pub struct NullVector {
    pub u: BlockVector,
    /// Second smallest singular value of the row-deleted matrix was also negligible.
    pub degenerate: bool,
    /// `||R u||` where `R` is the row-deleted matrix.
    pub residual: f64,
    /// `||R||_op`.
    pub matrix_norm: f64,
}

/// Multiply by the unit phase that makes the largest-magnitude coordinate (lowest index on ties)
/// real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let Some(&i) = top_k(v, 1).first() else { return };
    let a = v[i].norm();
    if a > 0.0 {
        let ph = v[i].conj() / a;
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

/// Null vector via the full SVD of the row-deleted matrix; `removed_row` is 0-based.
pub fn null_vector(lin: &TranslatedLinearization, removed_row: usize) -> Result<NullVector> {
    let dim = lin.dim();
    if removed_row >= dim {
        return Err(Error::IndexOutOfRange { index: removed_row, max: dim - 1 });
    }
    let (m, n) = (lin.m(), lin.n());
    if dim == 1 {
        return Ok(NullVector {
            u: BlockVector::from_flat(1, 1, &[Complex64::new(1.0, 0.0)])?,
            degenerate: false,
            residual: 0.0,
            matrix_norm: 0.0,
        });
    }
    let r = lin.materialize().without_row(removed_row);
    let (values, basis) = right_singular_basis(&r)?;
    let norm = values[0];
    let mut u = basis.column(dim - 1);
    normalize(&mut u);
    fix_phase(&mut u);
    let degenerate = values[dim - 2] <= NULLITY_TOL * norm;
    let residual = norm2(&r.matvec(&u));
    Ok(NullVector { u: BlockVector::from_flat(m, n, &u)?, degenerate, residual, matrix_norm: norm })
}

/// Cross-check route: the `removed_row`-th column of `Y(z)^{-1}`, normalized and phase-fixed.
pub fn null_vector_via_inverse(solver: &StructuredSolver<'_>, removed_row: usize) -> Result<BlockVector> {
    let col = solver.inverse_column(removed_row)?;
    let (m, n) = (col.m(), col.n());
    let mut flat = col.to_flat();
    normalize(&mut flat);
    fix_phase(&mut flat);
    BlockVector::from_flat(m, n, &flat)
}

/// Block norms `(||u_1||, ..., ||u_M||)` of a unit block vector.
pub fn mass_profile(u: &BlockVector) -> Result<Vec<f64>> {
    let norm = u.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    Ok(u.blocks().iter().map(|b| norm2(b)).collect())
}

/// Residuals of the block equations `z u_j = X_j u_{j+1}` (`j < M`) and of the truncated last
/// equation `z I~ u_M = X~_M u_1`, which omits the final row.
pub fn system_residuals(u: &BlockVector, lin: &TranslatedLinearization) -> Result<Vec<f64>> {
    let (m, n) = (lin.m(), lin.n());
    if u.m() != m || u.n() != n {
        return Err(Error::Dimension(format!("block vector {}x{} for a chain {}x{}", u.m(), u.n(), m, n)));
    }
    let z = lin.z();
    let chain = lin.chain();
    let mut out = Vec::with_capacity(m);
    for j in 1..=m {
        let next = if j < m { u.block(j + 1) } else { u.block(1) };
        let img = chain.factor(j).matvec(next);
        let rows = if j < m { n } else { n - 1 };
        let r: f64 = (0..rows).map(|i| (z * u.block(j)[i] - img[i]).norm_sqr()).sum();
        out.push(r.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::FactorChain;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cv(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| c(x)).collect()
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_to_sparse(&cv(&[0.8, 0.6, 0.0, 0.0]), 0.5).unwrap(), 0.0);
        let d = dist_to_sparse(&cv(&[0.5; 4]), 0.25).unwrap();
        assert!((d - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(dist_to_sparse(&cv(&[1.0, 1.0]), 0.5).is_err());
    }

    #[test]
    fn classify_examples() {
        let mut e = vec![c(0.0); 5];
        e[3] = Complex64::new(0.0, 1.0);
        let p = SphereParams::new(0.2, 0.05, 5).unwrap();
        let cl = classify(&e, &p).unwrap();
        assert_eq!((cl.verdict, cl.dist_to_sparse), (Verdict::Compressible, 0.0));
        let flat = vec![c(0.25); 16];
        let cl = classify(&flat, &SphereParams::new(1.0 / 16.0, 0.1, 16).unwrap()).unwrap();
        assert_eq!(cl.verdict, Verdict::Incompressible);
        assert!((cl.dist_to_sparse - (15.0f64 / 16.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_compressible() {
        let v = cv(&[0.8, 0.6]);
        let p = SphereParams::new(0.5, 0.6, 2).unwrap();
        assert_eq!(classify(&v, &p).unwrap().verdict, Verdict::Compressible);
    }

    #[test]
    fn net_bound_examples() {
        let p = SphereParams::new(1.0 / 16.0, 1.0 / 16.0, 16).unwrap();
        let b = net_cardinality_bound(&p, 16, 1.0).unwrap();
        assert!((b.value.unwrap() - 65536.0).abs() < 1e-6);
        let unit = net_cardinality_bound(&p, 16, 1.0 / 256.0).unwrap();
        assert!(unit.log10.abs() < 1e-15);
        assert!(net_cardinality_bound(&SphereParams::new(0.2, 0.1, 4).unwrap(), 4, 1.0).is_err());
        let huge = net_cardinality_bound(&SphereParams::new(0.1, 0.1, 10).unwrap(), 100_000, 1.0).unwrap();
        assert!(huge.value.is_none() && huge.log10 > 300.0);
    }

    #[test]
    fn small_net_covers_circles() {
        let p = SphereParams::new(0.5, 0.1, 2).unwrap();
        assert!(greedy_net(&p, 0.2, SeedStream::new(1)).is_err());
        let net = greedy_net(&p, max_net_resolution(0.1), SeedStream::new(1)).unwrap();
        assert!(!net.is_empty());
        for v in &net {
            assert!((norm2(v) - 1.0).abs() < 1e-12);
            assert_eq!(classify(v, &p).unwrap().verdict, Verdict::Compressible);
        }
        assert!(greedy_net(&SphereParams::new(0.5, 0.2, 2).unwrap(), 0.01, SeedStream::new(1)).is_err());
    }

    #[test]
    fn row_distance_examples() {
        let id = ComplexMatrix::identity(2);
        assert!((row_distance(&id, 0).unwrap() - 1.0).abs() < 1e-14);
        let dup = ComplexMatrix::from_rows(&[cv(&[1.0, 2.0]), cv(&[1.0, 2.0])]).unwrap();
        assert!(row_distance(&dup, 0).unwrap() < 1e-12);
        assert!(row_distance(&id, 2).is_err());
    }

    #[test]
    fn row_distances_agree_with_per_row_projection() {
        let mut rng = SeedStream::new(31).rng();
        for (rows, cols) in [(9, 9), (5, 8), (1, 3)] {
            let m = ComplexMatrix::from_fn(rows, cols, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let all = row_distances(&m).unwrap();
            for (k, d) in all.iter().enumerate() {
                let p = row_distance(&m, k).unwrap();
                assert!((d - p).abs() <= 1e-12 * p.max(1.0), "{rows}x{cols} row {k}: {d} vs {p}");
            }
        }
        // equal rows force the per-row fallback
        let m = ComplexMatrix::from_rows(&[cv(&[1.0, 2.0, 0.0]), cv(&[1.0, 2.0, 0.0]), cv(&[0.0, 0.0, 3.0])]).unwrap();
        let d = row_distances(&m).unwrap();
        assert!(d[0] < 1e-12 && d[1] < 1e-12 && (d[2] - 3.0).abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn null_vector_examples() {
        let lin = TranslatedLinearization::new(FactorChain::identities(1, 2), c(1.0));
        let nv = null_vector(&lin, 1).unwrap();
        let s = 0.5f64.sqrt();
        assert!((nv.u.block(1)[0] - c(s)).norm() < 1e-12 && (nv.u.block(2)[0] - c(s)).norm() < 1e-12);
        assert!(!nv.degenerate);
        let res = system_residuals(&nv.u, &lin).unwrap();
        assert!(res.iter().all(|&r| r < 1e-14));

        let x = ComplexMatrix::from_rows(&[cv(&[1.0, 2.0]), vec![c(3.0), Complex64::new(0.0, 1.0)]]).unwrap();
        let lin = TranslatedLinearization::new(FactorChain::new(vec![x]).unwrap(), c(0.5));
        let nv = null_vector(&lin, 1).unwrap();
        let row = lin.materialize().row(0);
        let dot: Complex64 = row.iter().zip(nv.u.block(1)).map(|(a, b)| a * b).sum();
        assert!(dot.norm() < 1e-14);
        let big = nv.u.block(1).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(nv.u.block(1).iter().any(|x| x.im == 0.0 && x.re == big));
    }

    #[test]
    fn zero_factors_are_degenerate() {
        let lin = TranslatedLinearization::new(
            FactorChain::new(vec![ComplexMatrix::zeros(3, 3)]).unwrap(),
            c(0.0),
        );
        assert!(null_vector(&lin, 2).unwrap().degenerate);
    }

    #[test]
    fn mass_profile_examples() {
        let mut e1 = BlockVector::zeros(3, 2).to_flat();
        e1[0] = c(1.0);
        let u = BlockVector::from_flat(3, 2, &e1).unwrap();
        assert_eq!(mass_profile(&u).unwrap(), vec![1.0, 0.0, 0.0]);
        let flat = vec![c(1.0 / 6f64.sqrt()); 6];
        let p = mass_profile(&BlockVector::from_flat(3, 2, &flat).unwrap()).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        assert!(mass_profile(&BlockVector::zeros(2, 2)).is_err());
    }
}
