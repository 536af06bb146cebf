use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode window [{lo}, {hi}] is wider than the limit {max}")]
    WindowTooWide { lo: i64, hi: i64, max: i64 },

    #[error("corrupted structure constants: {0}")]
    Corrupted(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
