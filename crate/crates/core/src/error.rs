use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("problem too large for the exact solver: {atoms} atoms exceeds the limit of {limit}; use wasserstein_1d or a coupling bound instead")]
    SizeExceeded { atoms: usize, limit: usize },

    #[error("unbounded support set: {0}")]
    UnboundedSupport(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
