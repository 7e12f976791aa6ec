use thiserror::Error;

use crate::wirtinger::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("metric is not positive definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("tangent vector is zero")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("no transition from chart {from} to chart {to}")]
    NoTransition { from: usize, to: usize },
    #[error("distinguished-frame conditions violated: {0}")]
    FrameConditions(String),
    #[error("predicate fails at the upper bracket λ = {lambda_hi}; retry with a larger upper bracket")]
    Bracket { lambda_hi: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
