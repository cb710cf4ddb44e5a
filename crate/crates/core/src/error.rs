use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("mesh functions live on different grids")]
    GridMismatch,

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("non-finite argument {0}")]
    NonFiniteArgument(f64),

    #[error("linear solve did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge after {iterations} sweeps (update {update:e})")]
    FixedPointDiverged { iterations: usize, update: f64 },

    #[error("scheme state error: {0}")]
    State(String),

    #[error("problem `{0}` has no exact solution")]
    MissingExact(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::SolverDiverged { .. } | Error::FixedPointDiverged { .. })
    }
}
