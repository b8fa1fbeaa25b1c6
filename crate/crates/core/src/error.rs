use thiserror::Error;

use crate::funcexpr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0:?} is not strictly inside the domain")]
    NotInterior([f64; 2]),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("non-finite value {value} at matrix entry ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("principal value did not converge at {point:?}: last increment {increment:e}")]
    PvNonConvergence { point: [f64; 2], increment: f64 },

    #[error("boundary lifting residual {0:e} exceeds tolerance")]
    LiftingResidual(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{0}")]
    Numerical(String),
}
