use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter (degree, order, count, flux coefficient) is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Two operands were built on different meshes or bases.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    /// Time integration produced a non-finite state.
    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    /// Bad data handed to a post-processing routine.
    #[error("data error: {0}")]
    Data(String),
    /// Unknown problem, forcing or exact-solution name.
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, FracError>;

impl From<std::io::Error> for FracError {
    fn from(e: std::io::Error) -> Self {
        FracError::Io(e.to_string())
    }
}
