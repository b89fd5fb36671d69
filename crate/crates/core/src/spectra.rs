//! Extreme singular values, operator norms and eigenvalues of the scaled product.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::ensembles::{EnsembleSpec, SeedStream};
use crate::error::{Error, Result};
use crate::linearization::{product, BlockVector, FactorChain, StructuredSolver, TranslatedLinearization};
use crate::numerics::{eigenvalues, normalize, singular_values, ComplexMatrix};

/// Largest `Mn` (or matrix side) handled by dense routes.
pub const DENSE_CAP: usize = 2000;
/// Iteration cap for the power and shift-invert iterations.
pub const MAX_ITERATIONS: usize = 500;
/// Relative spectral gap below which a shift-invert result is flagged.
pub const GAP_FLAG: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvMethod {
    Dense,
    ShiftInvert,
}

/// The smallest singular value of `Y(z)` and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallestSingular {
    pub value: f64,
    pub method: SvMethod,
    pub iterations: usize,
    /// Shift-invert only: the observed convergence rate implies a relative gap
    /// `sigma_2 / sigma_1 - 1` below [`GAP_FLAG`].
    pub gap_limited: bool,
}

/// Deterministic pseudo-random unit start vector.
fn start_vector(len: usize) -> Vec<Complex64> {
    let mut rng = SeedStream::new(0x5eed_0f_5eed).rng();
    let mut v: Vec<Complex64> =
        (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    normalize(&mut v);
    v
}

/// Smallest singular value of `Y(z)` (the paper's sigma_1).
///
/// `ShiftInvert` runs power iteration on `(Y(z)^* Y(z))^{-1}` with the structured solver and
/// stops when successive estimates of `sigma^2` differ by less than `tol` relatively.
pub fn smallest_singular_value(lin: &TranslatedLinearization, method: SvMethod, tol: f64) -> Result<SmallestSingular> {
    match method {
        SvMethod::Dense => {
            if lin.dim() > DENSE_CAP {
                return Err(Error::CapExceeded { size: lin.dim(), cap: DENSE_CAP });
            }
            let s = singular_values(&lin.materialize())?;
            Ok(SmallestSingular {
                value: *s.last().expect("nonempty"),
                method,
                iterations: 0,
                gap_limited: false,
            })
        }
        SvMethod::ShiftInvert => shift_invert(&StructuredSolver::new(lin)?, tol),
    }
}

/// Shift-invert iteration on a prepared solver.
pub fn shift_invert(solver: &StructuredSolver<'_>, tol: f64) -> Result<SmallestSingular> {
    let lin = solver.linearization();
    let (m, n) = (lin.m(), lin.n());
    let mut v = BlockVector::from_flat(m, n, &start_vector(m * n))?;
    let mut prev = f64::NAN;
    let mut prev_diff = f64::NAN;
    let mut ratio = 0.0;
    for it in 1..=MAX_ITERATIONS {
        let x = solver.solve_adjoint(&v)?;
        let rho = x.norm().powi(2);
        let y = solver.solve(&x)?;
        let est = 1.0 / rho;
        if !est.is_finite() || est == 0.0 {
            return Err(Error::NoConvergence { iterations: it, last_estimate: est.sqrt() });
        }
        let ynorm = y.norm();
        v = y.scale(Complex64::new(1.0 / ynorm, 0.0));
        if prev.is_finite() {
            let diff = (est - prev).abs();
            if prev_diff.is_finite() && prev_diff > 0.0 {
                ratio = diff / prev_diff;
            }
            if diff <= tol * est {
                // Rayleigh error contracts like (sigma_1/sigma_2)^4 per step.
                let gap = if ratio > 0.0 && ratio < 1.0 { ratio.powf(-0.25) - 1.0 } else { f64::INFINITY };
                return Ok(SmallestSingular {
                    value: est.sqrt(),
                    method: SvMethod::ShiftInvert,
                    iterations: it,
                    gap_limited: gap < GAP_FLAG,
                });
            }
            prev_diff = diff;
        }
        prev = est;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, last_estimate: prev.sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    Dense,
    Power,
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix, method: NormMethod, tol: f64) -> Result<f64> {
    let dense = || -> Result<f64> {
        if m.rows().max(m.cols()) > DENSE_CAP {
            return Err(Error::CapExceeded { size: m.rows().max(m.cols()), cap: DENSE_CAP });
        }
        Ok(singular_values(m)?[0])
    };
    match method {
        NormMethod::Dense => dense(),
        NormMethod::Power => {
            m.check_finite()?;
            match power_norm(|v| m.matvec(v), |v| m.adjoint_matvec(v), m.cols(), tol) {
                Ok(s) => Ok(s),
                Err(Error::NoConvergence { .. }) => dense(),
                Err(e) => Err(e),
            }
        }
    }
}

/// `||Y(z)||_op` by power iteration on the implicit operator.
pub fn linearization_norm(lin: &TranslatedLinearization, tol: f64) -> Result<f64> {
    let (m, n) = (lin.m(), lin.n());
    power_norm(
        |v| lin.apply(&BlockVector::from_flat(m, n, v).unwrap()).unwrap().to_flat(),
        |v| lin.apply_adjoint(&BlockVector::from_flat(m, n, v).unwrap()).unwrap().to_flat(),
        m * n,
        tol,
    )
}

fn power_norm(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    apply_adj: impl Fn(&[Complex64]) -> Vec<Complex64>,
    cols: usize,
    tol: f64,
) -> Result<f64> {
    let mut v = start_vector(cols);
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let mut w = apply_adj(&apply(&v));
        let est = normalize(&mut w).sqrt();
        if est == 0.0 {
            return Ok(0.0);
        }
        v = w;
        if prev.is_finite() && (est - prev).abs() <= tol * est {
            return Ok(est);
        }
        prev = est;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, last_estimate: prev })
}

/// Summands of the Latala bound for one matrix with independent centered entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LatalaInputs {
    /// `sum_j E|X_ij|^2` for each row `i`.
    pub row_second_moments: Vec<f64>,
    /// `sum_i E|X_ij|^2` for each column `j`.
    pub col_second_moments: Vec<f64>,
    /// `sum_ij E|X_ij|^4`.
    pub total_fourth_moment: f64,
}

impl LatalaInputs {
    pub fn new(row_second_moments: Vec<f64>, col_second_moments: Vec<f64>, total_fourth_moment: f64) -> Result<Self> {
        if row_second_moments.iter().chain(&col_second_moments).any(|&x| !(x >= 0.0)) || !(total_fourth_moment >= 0.0) {
            return Err(Error::InvalidParameter("Latala moments must be non-negative".into()));
        }
        Ok(Self { row_second_moments, col_second_moments, total_fourth_moment })
    }

    /// Every entry with the same second and fourth absolute moments.
    pub fn uniform(n: usize, second_abs: f64, fourth_abs: f64) -> Result<Self> {
        let row = vec![n as f64 * second_abs; n];
        Self::new(row.clone(), row, (n * n) as f64 * fourth_abs)
    }

    /// Declared moments of factor `k` (1-based) of an ensemble.
    pub fn from_ensemble(spec: &EnsembleSpec, k: usize) -> Result<Self> {
        use crate::ensembles::Assignment;
        let n = spec.n();
        let law = |i: usize, j: usize| match spec.assignment() {
            Assignment::Constant(d) => d.profile,
            Assignment::PerFactor(ds) => ds[k - 1].profile,
            Assignment::PerEntry { palette, pattern } => palette[pattern(k, i, j) % palette.len()].profile,
        };
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        let mut fourth = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = law(i, j);
                rows[i] += p.second_abs;
                cols[j] += p.second_abs;
                fourth += p.fourth_abs;
            }
        }
        Self::new(rows, cols, fourth)
    }

    /// The bound with `C = 1`.
    pub fn unit_bound(&self) -> f64 {
        let max_sqrt = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max).sqrt();
        max_sqrt(&self.row_second_moments) + max_sqrt(&self.col_second_moments) + self.total_fourth_moment.powf(0.25)
    }
}

/// `C (max_i sqrt(sum_j E|X_ij|^2) + max_j sqrt(sum_i E|X_ij|^2) + (sum_ij E|X_ij|^4)^{1/4})`.
pub fn latala_bound(inputs: &LatalaInputs, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("Latala constant must be positive, got {c}")));
    }
    Ok(c * inputs.unit_bound())
}

/// Smallest `C` with `mean_norm <= latala_bound(inputs, C)`.
pub fn fit_latala_constant(mean_norm: f64, inputs: &LatalaInputs) -> f64 {
    mean_norm / inputs.unit_bound()
}

/// Eigenvalue cap for dense solves of the product.
pub const EIGEN_CAP: usize = 1024;

/// Eigenvalues of `n^{-M/2} X_1 ... X_M`.
pub fn scaled_product_eigenvalues(chain: &FactorChain) -> Result<Vec<Complex64>> {
    let n = chain.n();
    if n > EIGEN_CAP {
        return Err(Error::CapExceeded { size: n, cap: EIGEN_CAP });
    }
    let scale = (n as f64).powf(-(chain.m() as f64) / 2.0);
    eigenvalues(&product(chain).scale(Complex64::new(scale, 0.0)))
}
