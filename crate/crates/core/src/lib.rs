//! Rhetorical-role labeling of legal judgment sentences.
//!
//! The pipeline is sentence -> embedding -> linear layer -> argmax. The
//! encoder sits behind the [`embedding::EmbeddingProvider`] trait; the
//! trainable part is a linear head optimized with class-weighted
//! cross-entropy and AdamW. Class imbalance can be handled by loss
//! re-weighting, undersampling or duplication oversampling, and results are
//! reported as macro precision/recall/F1.
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is
//! enabled (the default). Every parallel map collects in input order and all
//! reductions are sequential, so results are bit-identical across
//! [`Execution`] modes.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
mod error;
mod exec;
pub mod imbalance;
pub mod linear_model;
pub mod matrix;
pub mod metrics;

pub use error::Error;
pub use exec::Execution;

pub use corpus::{Corpus, LabeledSentence, RhetoricalLabel, SplitMode, SplitSpec, NUM_LABELS};
pub use embedding::{
    Casing, Embedding, EmbeddingProvider, HashedBow, Precomputed, TokenizerConfig,
};
pub use imbalance::{ClassWeights, WeightScheme};
pub use linear_model::{LinearCheckpoint, LinearParams, SelectionMetric, TrainConfig};
pub use matrix::Matrix;
pub use metrics::{ConfusionMatrix, MetricsReport};
