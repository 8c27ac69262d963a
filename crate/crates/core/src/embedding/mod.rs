//! Sentence embeddings behind a provider boundary.
//!
//! Two providers ship with the crate: [`HashedBow`], a deterministic signed
//! feature-hashing bag-of-words encoder, and [`Precomputed`], which serves
//! vectors computed offline by any external encoder.

mod hashed;
mod precomputed;
mod tokenize;

pub use hashed::{encode_hashed_bow, fnv1a64, HashedBow};
pub use precomputed::Precomputed;
pub use tokenize::{Casing, TokenizerConfig};

use crate::corpus::LabeledSentence;
use crate::matrix::Matrix;
use crate::Execution;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("no embedding for sentence {0:?}")]
    Missing(String),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate embedding key {0:?} (line {1})")]
    DuplicateKey(String, usize),
    #[error("invalid provider spec {0:?}; expected hashed:<dim> or precomputed:<path>")]
    BadSpec(String),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A fixed-dimension sentence vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Maps sentence text to a vector of constant dimension.
///
/// Implementations must be deterministic and safe to query concurrently.
pub trait EmbeddingProvider: Send + Sync {
    /// Whitespace-free identifier recorded in checkpoints.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError>;
}

/// Embeds every sentence; row `i` belongs to `sentences[i]`.
pub fn embed_batch(
    sentences: &[LabeledSentence],
    provider: &dyn EmbeddingProvider,
) -> Result<Matrix, EmbeddingError> {
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    embed_texts(&texts, provider, Execution::default())
}

pub fn embed_texts(
    texts: &[&str],
    provider: &dyn EmbeddingProvider,
    exec: Execution,
) -> Result<Matrix, EmbeddingError> {
    let dim = provider.dim();
    let rows = exec
        .map(texts, |t| provider.embed(t).map(|e| e.0))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_rows(rows, dim).expect("provider returned a vector of the wrong dimension"))
}
