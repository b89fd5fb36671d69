use faer::complex_native::c64;
use faer::{Col, Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with finite entries.
///
/// Storage is a `faer` matrix; every public accessor speaks `num_complex::Complex64`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<c64>,
}

#[inline]
pub(crate) fn to_c64(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
pub(crate) fn from_c64(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

pub(crate) fn col_from_slice(v: &[Complex64]) -> Col<c64> {
    Col::from_fn(v.len(), |i| to_c64(v[i]))
}

pub(crate) fn col_to_vec(c: &Col<c64>) -> Vec<Complex64> {
    (0..c.nrows()).map(|i| from_c64(c.read(i))).collect()
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: Mat::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Mat::identity(n, n) }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { Complex64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from a closure. The caller is responsible for finiteness;
    /// use [`ComplexMatrix::from_row_major`] for validated construction.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self { inner: Mat::from_fn(rows, cols, |i, j| to_c64(f(i, j))) }
    }

    /// Validated construction from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub(crate) fn from_faer(inner: Mat<c64>) -> Self {
        Self { inner }
    }

    pub(crate) fn as_faer(&self) -> MatRef<'_, c64> {
        self.inner.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        from_c64(self.inner.read(i, j))
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.inner.write(i, j, to_c64(value));
    }

    /// First non-finite entry, if any.
    pub fn check_finite(&self) -> Result<()> {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                let z = self.inner.read(i, j);
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> Vec<Complex64> {
        (0..self.cols()).map(|j| self.get(i, j)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            out.extend((0..self.cols()).map(|j| self.get(i, j)));
        }
        out
    }

    /// Copy with row `k` (0-based) deleted.
    pub fn without_row(&self, k: usize) -> ComplexMatrix {
        let rows = self.rows() - 1;
        Self::from_fn(rows, self.cols(), |i, j| self.get(if i < k { i } else { i + 1 }, j))
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        Self { inner: self.inner.adjoint().to_owned() }
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        let s = to_c64(s);
        Self { inner: Mat::from_fn(self.rows(), self.cols(), |i, j| self.inner.read(i, j) * s) }
    }

    /// `self - s I`.
    pub fn shift(&self, s: Complex64) -> ComplexMatrix {
        let mut out = self.clone();
        for i in 0..self.rows().min(self.cols()) {
            out.set(i, i, self.get(i, i) - s);
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.same_shape(other)?;
        Ok(Self { inner: &self.inner + &other.inner })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.same_shape(other)?;
        Ok(Self { inner: &self.inner - &other.inner })
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self { inner: &self.inner * &other.inner })
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols(), "matvec dimension mismatch");
        col_to_vec(&(&self.inner * col_from_slice(v)))
    }

    /// `self^* v`.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows(), "adjoint matvec dimension mismatch");
        col_to_vec(&(self.inner.adjoint() * col_from_slice(v)))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.norm_max()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &ComplexMatrix) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }
}

/// Euclidean norm.
pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `<a, b> = sum conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn sub_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(v: &mut [Complex64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_finite() {
        let err = ComplexMatrix::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert_eq!(err, Err(Error::NonFinite { row: 0, col: 1 }));
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn adjoint_matvec_matches_explicit_adjoint() {
        let m = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let v = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.0, 1.0)];
        let a = m.adjoint_matvec(&v);
        let b = m.adjoint().matvec(&v);
        assert!(norm2(&sub_vec(&a, &b)) < 1e-14);
    }

    #[test]
    fn without_row_drops_the_right_row() {
        let m = ComplexMatrix::from_fn(3, 2, |i, j| c((10 * i + j) as f64, 0.0));
        let r = m.without_row(1);
        assert_eq!(r.row(0), m.row(0));
        assert_eq!(r.row(1), m.row(2));
    }
}
