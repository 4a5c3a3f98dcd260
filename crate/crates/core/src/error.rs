use thiserror::Error;

/// Errors raised by mesh construction, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("nonconforming mesh: {0}")]
    Nonconforming(String),

    #[error("degenerate or inverted cell {cell}: signed area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    #[error("non-finite value in {field} at Picard iteration {iteration}")]
    NonFinite { field: &'static str, iteration: usize },

    #[error("positivity violated: min density {min_rho:e} at iteration {iteration}")]
    Positivity { min_rho: f64, iteration: usize },

    #[error("eigensolver failure: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
