use thiserror::Error;

/// Errors raised by the accountability engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("digest not found in ledger")]
    NotFound,

    #[error("no culpable agent: all responsibility scores are zero")]
    NoTarget,

    #[error("bound is vacuous: {0}")]
    Vacuous(String),

    #[error("config error ({assumption}): {message}")]
    Config {
        assumption: &'static str,
        message: String,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("unknown verification suite `{name}` (available: {available})")]
    UnknownSuite { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
