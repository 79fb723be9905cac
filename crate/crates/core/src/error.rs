use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: lower end {lo} exceeds upper end {hi}")]
    InvalidInterval { lo: String, hi: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse scalar {0:?}")]
    ParseScalar(String),

    #[error("scalar mode mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: String, found: String },

    #[error("malformed function description: {0}")]
    Malformed(String),

    #[error("operation needs zero tails (W^1,1 class) but the function has nonzero tails")]
    NonzeroTails,

    #[error("unsupported operator variant: {0}")]
    UnsupportedVariant(String),

    #[error("exact arithmetic cannot represent {0}; convert the input to floating point")]
    InexactInExactMode(String),

    #[error("input points are not sorted strictly increasing")]
    Unsorted,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
