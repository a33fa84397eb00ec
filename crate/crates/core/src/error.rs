use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input too short: {0}")]
    InputTooShort(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate pose: {0}")]
    DegeneratePose(String),

    #[error("rejected sequence: {0}")]
    RejectedSequence(String),

    #[error("cannot sample: {0}")]
    CannotSample(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("audio decode error: {0}")]
    Audio(String),
}

pub type Result<T> = std::result::Result<T, Error>;
