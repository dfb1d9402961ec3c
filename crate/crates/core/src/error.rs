use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid angle: {0} is not finite")]
    InvalidAngle(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model configuration error: {0}")]
    ModelConfig(String),

    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    TrainingDiverged { epoch: usize },

    /// The temporal gate was queried before any estimate arrived.
    #[error("no orientation estimate available yet")]
    NoEstimate,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
