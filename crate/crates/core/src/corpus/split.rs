use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, LabeledSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Shuffle sentences, ignoring document boundaries.
    SentenceShuffled,
    /// Shuffle documents and keep each document on one side.
    DocumentLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 42,
            mode: SplitMode::SentenceShuffled,
        }
    }
}

impl SplitSpec {
    /// `floor(train_fraction * n)`, tolerant of decimal fractions that land a
    /// hair below an integer in binary (0.29 * 100).
    pub fn train_quota(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

/// Splits the corpus into (train, validation).
///
/// Sentence mode puts exactly `floor(train_fraction * N)` sentences in train.
/// Document mode assigns whole shuffled documents to train until the quota is
/// met or exceeded. Both sides come back in shuffled order and must be
/// non-empty.
pub fn split(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Vec<LabeledSentence>, Vec<LabeledSentence>), CorpusError> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(CorpusError::BadFraction(f));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::TooSmallToSplit(n));
    }
    let quota = spec.train_quota(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let (train, val) = match spec.mode {
        SplitMode::SentenceShuffled => {
            let mut order: Vec<&LabeledSentence> = corpus.sentences().iter().collect();
            order.shuffle(&mut rng);
            let val = order.split_off(quota);
            (order, val)
        }
        SplitMode::DocumentLevel => {
            let mut docs: Vec<&str> = corpus.documents().iter().map(String::as_str).collect();
            docs.shuffle(&mut rng);
            let mut train = Vec::new();
            let mut val = Vec::new();
            for doc in docs {
                let side = if train.len() < quota {
                    &mut train
                } else {
                    &mut val
                };
                side.extend(corpus.sentences().iter().filter(|s| s.doc_id == doc));
            }
            (train, val)
        }
    };
    if train.is_empty() {
        return Err(CorpusError::EmptySplitSide("train"));
    }
    if val.is_empty() {
        return Err(CorpusError::EmptySplitSide("validation"));
    }
    Ok((
        train.into_iter().cloned().collect(),
        val.into_iter().cloned().collect(),
    ))
}
