use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature functions are linearly dependent (with the constant function)")]
    DependentFeatures,

    #[error("mixture family is infeasible: {0}")]
    InfeasibleFamily(String),

    #[error("projection did not converge: constraint residual {residual:e} after {iterations} iterations")]
    ProjectionFailed { residual: f64, iterations: usize },

    #[error("iterates diverged: {0}")]
    Diverged(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty feasible grid (no grid point satisfies the constraints)")]
    EmptyFeasibleGrid,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
