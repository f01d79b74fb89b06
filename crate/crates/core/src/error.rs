use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric overflow: target is not finite at x = {x}")]
    NumericOverflow { x: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown target function `{0}`")]
    UnknownFunction(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
