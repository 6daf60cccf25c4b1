//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a precondition (bad family parameters, shapes,
    /// out-of-range indices, malformed spec strings).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point lies outside the support of the family's measure.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix shape mismatch.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// An iterative numeric routine failed to converge or produced an
    /// unusable result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A scaling constant vanished, so the rescaled recursion is undefined.
    #[error("singular scaling: {0}")]
    SingularScaling(String),

    /// A fixed-point operand exceeded the register width budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A synthesized state deviates from its target beyond tolerance.
    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
