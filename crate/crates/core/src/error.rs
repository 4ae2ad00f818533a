use thiserror::Error;

/// Errors raised by the graphon-game library.
#[derive(Debug, Error)]
pub enum GraphonError {
    /// An argument lies outside the domain of the operation (coordinates
    /// outside `[0,1]`, resolutions below the minimum, bad confidence levels).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or matrix violates its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Dimensions or grid resolutions of two operands disagree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The contraction condition `(l_U/alpha_U) * lambda_max < 1` fails.
    #[error("contraction condition violated: factor {factor} >= 1")]
    ContractionViolated { factor: f64 },

    /// An iterative method exhausted its budget. `last_iterate` holds the
    /// final iterate and `history` the per-iteration residuals.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
        history: Vec<f64>,
    },

    /// Factorization or linear solve failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl GraphonError {
    /// True for failures of a numerical method on valid input, as opposed to
    /// invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GraphonError::IterationLimit { .. } | GraphonError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GraphonError>;
