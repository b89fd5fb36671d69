use faer::complex_native::c64;
use faer::linalg::solvers::{ColPivQr, PartialPivLu, Qr};
use faer::linalg::triangular_solve::solve_upper_triangular_in_place;
use faer::prelude::SpSolver;
use faer::{Col, Mat, Parallelism};
use num_complex::Complex64;

use super::matrix::{col_from_slice, col_to_vec, from_c64, norm2, to_c64, ComplexMatrix};
use crate::error::{Error, Result};

/// Default relative tolerance for factorization-based checks.
pub const FACTORIZATION_TOL: f64 = 1e-10;
/// Default relative tolerance for eigenproblem checks.
pub const EIGEN_TOL: f64 = 1e-8;
/// Condition estimates above this are reported as near-singular.
pub const CONDITION_CAP: f64 = 1e12;

/// Singular values in non-increasing order, optionally with singular directions.
///
/// `values[0]` is the largest. The smallest sits at the end; callers that think in
/// "sigma_1 = smallest" terms should use [`SingularSpectrum::smallest`].
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    /// Thin left singular vectors as columns (`rows x min(rows, cols)`).
    pub left: Option<ComplexMatrix>,
    /// Thin right singular vectors as columns (`cols x min(rows, cols)`).
    pub right: Option<ComplexMatrix>,
}

impl SingularSpectrum {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `U diag(values) V^*`, when directions were computed.
    pub fn reconstruct(&self) -> Option<ComplexMatrix> {
        let (u, v) = (self.left.as_ref()?, self.right.as_ref()?);
        let k = self.values.len();
        let scaled = ComplexMatrix::from_fn(u.rows(), k, |i, j| u.get(i, j) * self.values[j]);
        scaled.matmul(&v.adjoint()).ok()
    }
}

/// Singular value decomposition; directions are thin.
pub fn full_svd(m: &ComplexMatrix, directions: bool) -> Result<SingularSpectrum> {
    m.check_finite()?;
    if !directions {
        return Ok(SingularSpectrum { values: singular_values(m)?, left: None, right: None });
    }
    let svd = m.as_faer().thin_svd();
    let s = svd.s_diagonal();
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.read(b).re.total_cmp(&s.read(a).re));
    let values = order.iter().map(|&i| s.read(i).re.max(0.0)).collect();
    let u = svd.u();
    let v = svd.v();
    let left = ComplexMatrix::from_fn(m.rows(), k, |i, j| from_c64(u.read(i, order[j])));
    let right = ComplexMatrix::from_fn(m.cols(), k, |i, j| from_c64(v.read(i, order[j])));
    Ok(SingularSpectrum { values, left: Some(left), right: Some(right) })
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.check_finite()?;
    let mut values: Vec<f64> = m.as_faer().singular_values().into_iter().map(|s| s.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Full right singular basis (`cols x cols`) with singular values padded with zeros to
/// length `cols`, both ordered non-increasing. Used for null-space extraction of wide matrices.
pub(crate) fn right_singular_basis(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    m.check_finite()?;
    let svd = m.as_faer().svd();
    let s = svd.s_diagonal();
    let k = s.nrows();
    let n = m.cols();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.read(b).re.total_cmp(&s.read(a).re));
    order.extend(k..n);
    let mut values: Vec<f64> = order[..k].iter().map(|&i| s.read(i).re.max(0.0)).collect();
    values.resize(n, 0.0);
    let v = svd.v();
    let basis = ComplexMatrix::from_fn(n, n, |i, j| from_c64(v.read(i, order[j])));
    Ok((values, basis))
}

/// Diagonal similarity `B = D^{-1} A D` equalizing row and column norms
/// (Parlett-Reinsch, radix 2). Returns `B` and the diagonal of `D`.
pub fn balance(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    const RADIX: f64 = 2.0;
    let n = m.rows();
    let mut b = m.clone();
    let mut scale = vec![1.0; n];
    let mut done = false;
    // Each sweep strictly reduces the off-diagonal norm; the cap only guards pathological input.
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b.get(j, i).norm();
                    r += b.get(i, j).norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    b.set(i, j, b.get(i, j) / f);
                    b.set(j, i, b.get(j, i) * f);
                }
            }
        }
    }
    Ok((b, scale))
}

/// Eigenvalues of a square matrix, computed after balancing. Order is unspecified.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    m.check_finite()?;
    let (b, _) = balance(m)?;
    Ok(b.as_faer().complex_eigenvalues().into_iter().map(from_c64).collect())
}

/// Eigenvalues with unit eigenvectors (as columns of `vectors`).
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

impl Eigenpairs {
    /// Largest `||m v - lambda v||` over the returned pairs.
    pub fn max_residual(&self, m: &ComplexMatrix) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let v = self.vectors.column(k);
                let mv = m.matvec(&v);
                mv.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - self.values[k] * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn eigenpairs(m: &ComplexMatrix) -> Result<Eigenpairs> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    m.check_finite()?;
    let n = m.rows();
    let (b, scale) = balance(m)?;
    let evd = b.as_faer().eigendecomposition::<c64>();
    let s = evd.s().column_vector();
    let u = evd.u();
    let values = (0..n).map(|i| from_c64(s.read(i))).collect();
    let mut vectors = ComplexMatrix::from_fn(n, n, |i, j| from_c64(u.read(i, j)) * scale[i]);
    for j in 0..n {
        let norm = norm2(&vectors.column(j));
        if norm > 0.0 {
            for i in 0..n {
                vectors.set(i, j, vectors.get(i, j) / norm);
            }
        }
    }
    Ok(Eigenpairs { values, vectors })
}

/// Minimum-norm least-squares solution of `m x = b` via the SVD pseudo-inverse.
pub fn min_norm_solve(m: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} for a {}x{} system",
            b.len(),
            m.rows(),
            m.cols()
        )));
    }
    let svd = full_svd(m, true)?;
    let (u, v) = (svd.left.as_ref().unwrap(), svd.right.as_ref().unwrap());
    let cutoff = svd.largest() * (m.rows().max(m.cols()) as f64) * f64::EPSILON;
    let mut x = vec![Complex64::new(0.0, 0.0); m.cols()];
    for (k, &s) in svd.values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let coeff: Complex64 = (0..m.rows()).map(|i| u.get(i, k).conj() * b[i]).sum::<Complex64>() / s;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += v.get(i, k) * coeff;
        }
    }
    Ok(x)
}

/// `b` minus its orthogonal projection onto the column space of `m`. The basis comes from a
/// column-pivoted QR truncated at the numerical rank, so rank-deficient `m` is handled.
pub fn range_residual(m: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "vector of length {} against a {}x{} matrix",
            b.len(),
            m.rows(),
            m.cols()
        )));
    }
    m.check_finite()?;
    let mut out = b.to_vec();
    if m.cols() == 0 || m.rows() == 0 {
        return Ok(out);
    }
    let qr = ColPivQr::new(m.as_faer());
    let r = qr.compute_thin_r();
    let q = qr.compute_thin_q();
    let lead = from_c64(r.read(0, 0)).norm();
    let cutoff = lead * (m.rows().max(m.cols()) as f64) * f64::EPSILON;
    let rank = (0..r.nrows().min(r.ncols())).take_while(|&i| lead > 0.0 && from_c64(r.read(i, i)).norm() > cutoff).count();
    for k in 0..rank {
        let coeff: Complex64 = (0..m.rows()).map(|i| from_c64(q.read(i, k)).conj() * b[i]).sum();
        for (i, o) in out.iter_mut().enumerate() {
            *o -= from_c64(q.read(i, k)) * coeff;
        }
    }
    Ok(out)
}

/// Distance from every row of `m` to the span of the other rows, from one QR of `m^*`.
///
/// With `m^* = QR` the rows of `R^{-1} Q^*` are dual to the rows of `m`, so the distance for
/// row `k` is `1 / ||e_k^T R^{-1}||`. `None` when the rows are dependent or the Frobenius
/// condition estimate of `R` exceeds [`CONDITION_CAP`].
pub(crate) fn row_span_distances(m: &ComplexMatrix) -> Result<Option<Vec<f64>>> {
    m.check_finite()?;
    let k = m.rows();
    if k == 0 || k > m.cols() {
        return Ok(None);
    }
    let r = Qr::new(m.as_faer().adjoint()).compute_thin_r();
    if (0..k).any(|i| from_c64(r.read(i, i)).norm() == 0.0) {
        return Ok(None);
    }
    let mut inv = Mat::<c64>::identity(k, k);
    solve_upper_triangular_in_place(r.as_ref(), inv.as_mut(), Parallelism::None);
    let row_norms: Vec<f64> =
        (0..k).map(|i| (0..k).map(|j| from_c64(inv.read(i, j)).norm_sqr()).sum::<f64>().sqrt()).collect();
    let inv_norm = row_norms.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cond = r.norm_l2() * inv_norm;
    if !cond.is_finite() || cond > CONDITION_CAP {
        return Ok(None);
    }
    Ok(Some(row_norms.iter().map(|x| 1.0 / x).collect()))
}

/// LU factorization with partial pivoting plus a 1-norm condition estimate.
pub struct LuFactor {
    lu: PartialPivLu<c64>,
    n: usize,
    condition: f64,
}

impl LuFactor {
    /// Factorizes `m`, failing with [`Error::NearSingular`] when the condition estimate
    /// exceeds `cap` (or is not finite).
    pub fn new(m: &ComplexMatrix, cap: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        m.check_finite()?;
        let lu = m.as_faer().partial_piv_lu();
        let mut f = Self { lu, n: m.rows(), condition: f64::INFINITY };
        let inv_norm = f.inverse_norm_one_estimate();
        let condition = m.norm_one() * inv_norm;
        f.condition = if condition.is_finite() { condition } else { f64::INFINITY };
        if !(f.condition <= cap) {
            return Err(Error::NearSingular { condition: f.condition, cap });
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        col_to_vec(&self.lu.solve(col_from_slice(b)))
    }

    /// Solves `m X = B` for every column of `B` at once.
    pub fn solve_matrix(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.rows(), self.n, "rhs row count mismatch");
        ComplexMatrix::from_faer(self.lu.solve(b.as_faer()))
    }

    /// Solves `m^* x = b` with the same factorization.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        col_to_vec(&self.lu.solve_conj_transpose(col_from_slice(b)))
    }

    pub fn inverse(&self) -> ComplexMatrix {
        use faer::linalg::solvers::SolverCore;
        ComplexMatrix::from_faer(self.lu.inverse())
    }

    // Hager's estimator for ||A^{-1}||_1 (complex variant, at most 5 sweeps).
    fn inverse_norm_one_estimate(&self) -> f64 {
        let n = self.n;
        let mut x: Col<c64> = Col::from_fn(n, |_| c64::new(1.0 / n as f64, 0.0));
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.lu.solve(&x);
            let y_norm: f64 = (0..n).map(|i| from_c64(y.read(i)).norm()).sum();
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            estimate = f64::max(estimate, y_norm);
            let sign = Col::from_fn(n, |i| {
                let v = from_c64(y.read(i));
                let a = v.norm();
                if a == 0.0 { c64::new(1.0, 0.0) } else { to_c64(v / a) }
            });
            let z = self.lu.solve_conj_transpose(&sign);
            let (mut j, mut zmax) = (0, -1.0);
            let mut zx = 0.0;
            for i in 0..n {
                let zi = from_c64(z.read(i));
                if zi.norm() > zmax {
                    zmax = zi.norm();
                    j = i;
                }
                zx += (zi.conj() * from_c64(x.read(i))).re;
            }
            if zmax <= zx || j == last_j {
                break;
            }
            last_j = j;
            x = Col::from_fn(n, |i| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        }
        estimate
    }
}

/// Dense inverse with a condition gate.
pub fn dense_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(LuFactor::new(m, CONDITION_CAP)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn svd_of_diagonal_and_zero() {
        let d = ComplexMatrix::from_real_diag(&[1.0, 3.0, 2.0]);
        let s = full_svd(&d, false).unwrap();
        assert_eq!(s.values.len(), 3);
        for (a, b) in s.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = full_svd(&ComplexMatrix::zeros(2, 2), true).unwrap();
        assert_eq!(z.values, vec![0.0, 0.0]);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = ComplexMatrix::identity(2);
        m.set(1, 0, c(f64::INFINITY, 0.0));
        assert_eq!(full_svd(&m, false).unwrap_err(), Error::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn eigenvalues_of_small_examples() {
        let mut e = eigenvalues(&ComplexMatrix::from_diag(&[c(1.0, 1.0), c(2.0, 0.0)])).unwrap();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((e[0] - c(1.0, 1.0)).norm() < 1e-12 && (e[1] - c(2.0, 0.0)).norm() < 1e-12);

        let nil = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0); 2]]).unwrap();
        assert!(eigenvalues(&nil).unwrap().iter().all(|z| z.norm() < 1e-12));

        // companion matrix of z^3 - 1
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let comp = ComplexMatrix::from_rows(&[
            vec![zero, zero, one],
            vec![one, zero, zero],
            vec![zero, one, zero],
        ])
        .unwrap();
        let e = eigenvalues(&comp).unwrap();
        for k in 0..3 {
            let root = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            assert!(e.iter().any(|l| (l - root).norm() < 1e-10), "missing {root}");
        }
        assert!(matches!(eigenvalues(&ComplexMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn balancing_is_a_similarity() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1e6, 0.0), c(0.0, 2.0)],
            vec![c(1e-6, 0.0), c(2.0, 0.0), c(1e4, 0.0)],
            vec![c(0.0, 1.0), c(1e-4, 0.0), c(3.0, 0.0)],
        ])
        .unwrap();
        let (b, d) = balance(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = m.get(i, j) * d[j] / d[i];
                assert!((b.get(i, j) - expect).norm() <= 1e-15 * expect.norm().max(1.0));
            }
        }
        assert!(b.frobenius_norm() < m.frobenius_norm());
    }

    #[test]
    fn min_norm_solve_examples() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5)];
        let x = min_norm_solve(&ComplexMatrix::identity(2), &b).unwrap();
        assert!((x[0] - b[0]).norm() < 1e-14 && (x[1] - b[1]).norm() < 1e-14);

        let p = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let x = min_norm_solve(&p, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-14 && x[1].norm() < 1e-14);
        let r = p.matvec(&x);
        let residual = ((r[0] - 1.0).norm_sqr() + (r[1] - 1.0).norm_sqr()).sqrt();
        assert!((residual - 1.0).abs() < 1e-14);

        assert!(matches!(min_norm_solve(&p, &[c(1.0, 0.0)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn range_residual_examples() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.25, -1.0)];
        let r = range_residual(&ComplexMatrix::identity(3), &b).unwrap();
        assert!(norm2(&r) < 1e-14);

        // both columns equal e_1: only the e_1 component is removed
        let dup = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let r = range_residual(&dup, &b).unwrap();
        assert!(r[0].norm() < 1e-14 && (r[1] - b[1]).norm() < 1e-14 && (r[2] - b[2]).norm() < 1e-14);

        let r = range_residual(&ComplexMatrix::zeros(3, 2), &b).unwrap();
        assert_eq!(r, b);
        assert!(matches!(range_residual(&dup, &b[..2]), Err(Error::Dimension(_))));
    }

    #[test]
    fn range_residual_matches_pseudo_inverse_projection() {
        let mut rng = crate::ensembles::SeedStream::new(17).rng();
        let mut g = || c(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0));
        for (rows, cols, rank) in [(6, 5, 5), (7, 4, 2), (5, 5, 3)] {
            let left = ComplexMatrix::from_fn(rows, rank, |_, _| g());
            let right = ComplexMatrix::from_fn(rank, cols, |_, _| g());
            let m = left.matmul(&right).unwrap();
            let b: Vec<Complex64> = (0..rows).map(|_| g()).collect();
            let x = min_norm_solve(&m, &b).unwrap();
            let oracle: Vec<Complex64> = b.iter().zip(m.matvec(&x)).map(|(p, q)| p - q).collect();
            let r = range_residual(&m, &b).unwrap();
            let err: f64 = r.iter().zip(&oracle).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-12, "{rows}x{cols} rank {rank}: {err}");
        }
    }

    #[test]
    fn lu_detects_singular_and_solves_adjoint() {
        let sing = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert!(matches!(LuFactor::new(&sing, CONDITION_CAP), Err(Error::NearSingular { .. })));

        let m = ComplexMatrix::from_rows(&[vec![c(2.0, 1.0), c(0.0, -1.0)], vec![c(1.0, 0.0), c(3.0, 0.5)]]).unwrap();
        let lu = LuFactor::new(&m, CONDITION_CAP).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let x = lu.solve_adjoint(&b);
        let back = m.adjoint().matvec(&x);
        assert!((back[0] - b[0]).norm() < 1e-14 && (back[1] - b[1]).norm() < 1e-14);
        // exact 1-norm condition of a 2x2 is small here; the estimate is a lower bound on it
        let exact = m.norm_one() * lu.inverse().norm_one();
        assert!(lu.condition_estimate() <= exact * (1.0 + 1e-12));
        assert!(lu.condition_estimate() >= exact / 2.0);
    }
}
