use thiserror::Error;

/// Errors raised by the tensor kernels, structure tests and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("negative entry {value} at index {index} cannot be raised to a fractional power")]
    NegativePowerRHS { index: usize, value: f64 },

    #[error("matrix is singular (pivot {pivot} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("tensor is not a Z-tensor")]
    NotZTensor,

    #[error("tensor has entries outside the (i, j, ..., j) positions")]
    NotStructured,

    #[error("no nonnegative solution: component {index} of M^-1 b is {value}")]
    NoNonnegativeSolution { index: usize, value: f64 },

    #[error("tensor and right-hand side are identically zero")]
    AllZero,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
