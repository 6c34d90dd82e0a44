use htensor_conic::{ConicError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("index entry {entry} is outside 1..={dim}")]
    Index { entry: usize, dim: usize },
    #[error("{0}")]
    Argument(String),
    #[error("conflicting values {first} and {second} for entry {idx:?}")]
    Conflict { idx: Vec<usize>, first: f64, second: f64 },
    #[error("degenerate certificate: {0}")]
    Degenerate(String),
    #[error("power iteration did not converge within {0} iterations")]
    Convergence(usize),
    #[error("solver ended with status {status:?} after {iterations} iterations")]
    Solver { status: SolveStatus, iterations: usize },
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0} has no exact root of the requested order")]
    NotPerfectPower(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(TensorError::Argument(msg.into()))
}
