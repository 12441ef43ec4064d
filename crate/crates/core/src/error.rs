use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("metric does not admit non-central constant-length Killing fields: |a - b - c^2| = {residual:e}")]
    NotKvfAdmissible { residual: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("eigenvalue -1 present, phase branch undefined")]
    BranchUndefined,

    #[error("eigenvalue tracking failed after {steps} steps")]
    TrackingFailed { steps: usize },

    #[error("graph resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
