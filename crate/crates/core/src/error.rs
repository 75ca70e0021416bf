use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum BcdError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph contains a directed cycle")]
    Cyclic,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl BcdError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        BcdError::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        BcdError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        BcdError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BcdError>;
