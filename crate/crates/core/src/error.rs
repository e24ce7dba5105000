use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step index must be >= 1 (got 0)")]
    ZeroStepIndex,

    #[error("step index {n} is beyond the explicit table of length {len}")]
    BeyondTable { n: u64, len: usize },

    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("model has no Lyapunov function")]
    MissingLyapunov,

    #[error("model provides no Jacobians for the tangent process")]
    MissingJacobian,

    #[error("non-finite state at step {n} (x = {x:?})")]
    BlowUp { n: u64, x: Vec<f64> },

    #[error("offset {offset} outside the step [0, {gamma}]")]
    OffsetOutOfRange { offset: f64, gamma: f64 },

    #[error("too many singular paths: {rejected} of {total} rejected")]
    SingularPaths { rejected: usize, total: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint {checkpoint} beyond the simulated horizon {horizon}")]
    CheckpointBeyondHorizon { checkpoint: u64, horizon: u64 },

    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
