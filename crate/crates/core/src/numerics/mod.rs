//! Dense complex linear algebra shared by every other module.

mod csv;
mod decomp;
mod matrix;

pub use csv::{format_complex, parse_complex};
pub(crate) use decomp::{right_singular_basis, row_span_distances};
pub use decomp::{
    balance, dense_inverse, eigenpairs, eigenvalues, full_svd, min_norm_solve, range_residual, singular_values, Eigenpairs,
    LuFactor, SingularSpectrum, CONDITION_CAP, EIGEN_TOL, FACTORIZATION_TOL,
};
pub use matrix::{inner, norm2, normalize, sub_vec, ComplexMatrix};
