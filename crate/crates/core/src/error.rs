use thiserror::Error;

/// Errors produced by the metric, geometry, solver and soliton layers.
#[derive(Debug, Error)]
pub enum FlowError {
    /// A conformal factor (or other positive quantity) was zero, negative or not finite.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Tail fits and limit estimates need enough nodes to be meaningful.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("rescaling window P = {requested} exceeds the grid; maximal admissible P is {max_admissible}")]
    WindowTooLarge { requested: f64, max_admissible: f64 },

    #[error("time step rejected: {0}")]
    StepRejected(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlowError>;
