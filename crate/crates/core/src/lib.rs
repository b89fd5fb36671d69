//! Block-cyclic linearizations of products of independent random matrices.
//!
//! The crate builds the translated linearization `Y(z) = Y - zI` of a factor chain
//! `X1 X2 ... XM`, solves with it in `O(M n^2)` per right-hand side after one `n x n`
//! factorization, and provides the diagnostics used to probe its smallest singular value.

pub mod error;
pub mod numerics;

pub mod anticoncentration;
pub mod ensembles;
pub mod experiments;
pub mod geometry;
pub mod linearization;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
