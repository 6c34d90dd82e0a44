use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("power cone exponent must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("variable index {index} out of range for a problem with {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("variable {0} is assigned to more than one cone block")]
    VariableInTwoCones(usize),
    #[error("equality row {row} has a non-finite coefficient or right-hand side")]
    NonFinite { row: usize },
    #[error("point has length {got}, problem has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("KKT factorization failed at pivot {0}")]
    Factorization(usize),
    #[error("invalid solver configuration: {0}")]
    Config(String),
}
