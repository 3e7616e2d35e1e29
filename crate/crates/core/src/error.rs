use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("filter design: {0}")]
    FilterDesign(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("validation failed for {participant}: {summary}")]
    ValidationFailed { participant: String, summary: String },

    #[error("{path}:{row}: {msg}")]
    Csv { path: String, row: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
