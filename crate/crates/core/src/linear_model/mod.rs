//! Linear classification head over sentence embeddings.
//!
//! Logits are `z = W x + b`; training minimizes the mean over a batch of
//! `weight[class] * -log softmax(z)[class]` with AdamW and keeps the
//! parameters of the epoch that scored best on validation data.

mod checkpoint;
mod loss;
mod optim;
mod params;
mod train;

pub use checkpoint::LinearCheckpoint;
pub use loss::{cross_entropy, log_sum_exp, loss_gradient, softmax, weighted_ce_loss};
pub use optim::{adamw_update, AdamWConfig, OptimizerState};
pub use params::{argmax, Gradients, LinearParams};
pub use train::{
    batch_gradient, evaluate, fit, train, train_with, Dataset, EpochRecord, FitOutcome,
    SelectionMetric, TrainConfig, TrainOutcome,
};

use crate::embedding::EmbeddingError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{0} set is empty")]
    EmptyData(&'static str),
    #[error("{weights} class weights for {classes} classes")]
    WeightCount { weights: usize, classes: usize },
    #[error("label index {0} out of range")]
    LabelOutOfRange(usize),
    #[error("checkpoint line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("checkpoint provider {checkpoint:?} does not match provider {provider:?}")]
    ProviderMismatch {
        checkpoint: String,
        provider: String,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
