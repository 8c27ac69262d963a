use std::path::PathBuf;

use crate::config::ConfigError;
use crate::corpus::CorpusError;
use crate::embedding::EmbeddingError;
use crate::imbalance::ImbalanceError;
use crate::linear_model::ModelError;
use crate::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}{source}", context(.path))]
    Corpus {
        path: Option<PathBuf>,
        source: CorpusError,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Imbalance(#[from] ImbalanceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
}

fn context(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!("{}: ", p.display()))
        .unwrap_or_default()
}

impl From<CorpusError> for Error {
    fn from(source: CorpusError) -> Self {
        Error::Corpus { path: None, source }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for runtime (I/O) failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Corpus {
                source: CorpusError::Io(_),
                ..
            }
            | Error::Embedding(EmbeddingError::Io(_))
            | Error::Model(ModelError::Io(_) | ModelError::Embedding(EmbeddingError::Io(_))) => 1,
            _ => 2,
        }
    }
}
