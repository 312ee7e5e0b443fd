use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    #[error("pilot length {tau_p} is shorter than the number of UEs {num_ues}")]
    TauTooSmall { tau_p: usize, num_ues: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("fixed-point iteration did not converge within {0} iterations")]
    MaxIters(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("brute-force search supports at most {max} UEs, got {got}")]
    TooManyUes { max: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
