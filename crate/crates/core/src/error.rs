use thiserror::Error;

/// Errors raised by the numerical and experimental routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("index {index} out of range (largest valid index {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("shift z = 0 is not allowed: the block reduction divides by z")]
    ZeroShift,

    #[error("matrix is singular or nearly so (condition estimate {condition:.3e} exceeds {cap:.1e})")]
    NearSingular { condition: f64, cap: f64 },

    #[error("iteration did not converge after {iterations} steps (last estimate {last_estimate:.6e})")]
    NoConvergence { iterations: usize, last_estimate: f64 },

    #[error("size {size} exceeds the dense cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("vector is not a unit vector (norm {norm:.15})")]
    NotUnit { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distribution `{name}` is not admissible: {reason}")]
    Inadmissible { name: String, reason: String },

    #[error("unknown distribution `{name}` (valid: {valid})")]
    UnknownDistribution { name: String, valid: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("test function violates its support at z = {re} + {im}i")]
    Support { re: f64, im: f64 },

    #[error("{excluded} of {total} trials failed, exceeding the failure budget")]
    FailureBudget { excluded: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
