use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QiError {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance matrix violates the uncertainty principle or symmetry.
    #[error("unphysical state: {0}")]
    Unphysical(String),

    /// Operand sizes disagree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The operation is documented not to support this input.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// Both variances vanish, so no threshold separates the hypotheses.
    #[error("degenerate decision: {0}")]
    Degenerate(String),

    /// The Fock truncation loses more probability mass than allowed.
    #[error("truncation insufficient: deficit {deficit:e} exceeds {limit:e}; use dim >= {required_dim}")]
    Truncation {
        deficit: f64,
        limit: f64,
        required_dim: usize,
    },

    /// A sweep specification failed validation; every problem is listed.
    #[error("invalid sweep spec: {}", .0.join("; "))]
    Spec(Vec<String>),
}

pub type Result<T, E = QiError> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> QiError {
    QiError::Domain(msg.into())
}
