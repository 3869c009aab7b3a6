use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported: 2, 3)")]
    UnsupportedDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point:?} lies outside the field domain")]
    OutsideDomain { point: Vec<f64> },

    /// A closed ball (or similarity image) was not inside the domain. The
    /// direction points from the ball center towards the first exterior hit.
    #[error("set not contained in domain; violating direction {direction:?}")]
    NotContained { direction: Vec<f64> },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("sequence constraint `{constraint}` violated at m = {index}")]
    SequenceConstraint { index: usize, constraint: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
