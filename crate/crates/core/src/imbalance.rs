//! Class-imbalance handling: loss weights and dataset resampling.
//!
//! Weight schemes, with `N` the total count and `K` the number of classes:
//!
//! * inverse frequency: `w[c] = N / (K * count[c])`, so `sum(w[c] * count[c]) = N`
//!   and a balanced dataset gets all-ones weights;
//! * direct frequency: `w[c] = K * count[c] / N`, the elementwise reciprocal,
//!   which favors frequent classes;
//! * uniform: all ones.
//!
//! Resampling materializes a new, exactly balanced dataset.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledSentence, RhetoricalLabel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImbalanceError {
    #[error("class {0} has no samples; inverse-frequency weight is undefined")]
    ZeroCount(usize),
    #[error("all counts are zero")]
    NoSamples,
    #[error("class weights must be finite and non-negative with at least one positive entry")]
    InvalidWeights,
    #[error("expected {expected} weights, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Per-class multipliers on the cross-entropy term, in class index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, ImbalanceError> {
        let valid = w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().any(|x| *x > 0.0);
        if valid {
            Ok(Self(w))
        } else {
            Err(ImbalanceError::InvalidWeights)
        }
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Replaces individual entries.
    pub fn with_overrides<I>(mut self, overrides: I) -> Result<Self, ImbalanceError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        for (c, w) in overrides {
            if c >= self.0.len() {
                return Err(ImbalanceError::WrongLength {
                    expected: self.0.len(),
                    got: c + 1,
                });
            }
            self.0[c] = w;
        }
        Self::new(self.0)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ImbalanceError> {
        Self::new(self.0.iter().map(|w| w * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for ClassWeights {
    type Error = ImbalanceError;

    fn try_from(w: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<ClassWeights> for Vec<f64> {
    fn from(w: ClassWeights) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[serde(alias = "inverse")]
    InverseFrequency,
    #[serde(alias = "direct")]
    DirectFrequency,
    Uniform,
}

impl WeightScheme {
    pub fn weights(self, counts: &[usize]) -> Result<ClassWeights, ImbalanceError> {
        match self {
            WeightScheme::InverseFrequency => inverse_frequency_weights(counts),
            WeightScheme::DirectFrequency => direct_frequency_weights(counts),
            WeightScheme::Uniform => Ok(ClassWeights::uniform(counts.len())),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inverse" | "inverse_frequency" => Ok(WeightScheme::InverseFrequency),
            "direct" | "direct_frequency" => Ok(WeightScheme::DirectFrequency),
            "uniform" => Ok(WeightScheme::Uniform),
            other => Err(format!("unknown weight scheme {other:?}")),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::InverseFrequency => "inverse_frequency",
            WeightScheme::DirectFrequency => "direct_frequency",
            WeightScheme::Uniform => "uniform",
        })
    }
}

/// `w[c] = N / (K * count[c])`. Every count must be positive.
pub fn inverse_frequency_weights(counts: &[usize]) -> Result<ClassWeights, ImbalanceError> {
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(ImbalanceError::ZeroCount(c));
    }
    if counts.is_empty() {
        return Err(ImbalanceError::NoSamples);
    }
    let n: usize = counts.iter().sum();
    let k = counts.len();
    ClassWeights::new(
        counts
            .iter()
            .map(|&c| n as f64 / (k as f64 * c as f64))
            .collect(),
    )
}

/// `w[c] = K * count[c] / N`. Absent classes get weight 0.
pub fn direct_frequency_weights(counts: &[usize]) -> Result<ClassWeights, ImbalanceError> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(ImbalanceError::NoSamples);
    }
    let k = counts.len();
    ClassWeights::new(
        counts
            .iter()
            .map(|&c| k as f64 * c as f64 / n as f64)
            .collect(),
    )
}

fn members_by_class<T>(items: &[T], class_of: &impl Fn(&T) -> usize) -> Vec<Vec<usize>> {
    let k = items.iter().map(class_of).max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (i, item) in items.iter().enumerate() {
        members[class_of(item)].push(i);
    }
    members
}

/// Keeps `m = min present-class count` items of every present class, chosen
/// uniformly without replacement. Retained items keep their relative order.
pub fn undersample_by<T: Clone>(
    items: &[T],
    class_of: impl Fn(&T) -> usize,
    seed: u64,
) -> Result<Vec<T>, ImbalanceError> {
    if items.is_empty() {
        return Err(ImbalanceError::EmptyDataset);
    }
    let members = members_by_class(items, &class_of);
    let m = members
        .iter()
        .map(Vec::len)
        .filter(|&n| n > 0)
        .min()
        .expect("non-empty dataset has a present class");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; items.len()];
    for class in members.iter().filter(|c| !c.is_empty()) {
        for j in index::sample(&mut rng, class.len(), m) {
            keep[class[j]] = true;
        }
    }
    Ok(items
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(it, _)| it.clone())
        .collect())
}

/// Brings every present class up to `M = max present-class count`: all
/// originals in their order, followed by duplicates drawn uniformly with
/// replacement, class by class.
pub fn oversample_by<T: Clone>(
    items: &[T],
    class_of: impl Fn(&T) -> usize,
    seed: u64,
) -> Result<Vec<T>, ImbalanceError> {
    if items.is_empty() {
        return Err(ImbalanceError::EmptyDataset);
    }
    let members = members_by_class(items, &class_of);
    let big = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = items.to_vec();
    for class in members.iter().filter(|c| !c.is_empty()) {
        for _ in class.len()..big {
            out.push(items[class[rng.gen_range(0..class.len())]].clone());
        }
    }
    Ok(out)
}

pub fn undersample(
    sentences: &[LabeledSentence],
    seed: u64,
) -> Result<Vec<LabeledSentence>, ImbalanceError> {
    undersample_by(sentences, |s| s.label.index(), seed)
}

pub fn oversample(
    sentences: &[LabeledSentence],
    seed: u64,
) -> Result<Vec<LabeledSentence>, ImbalanceError> {
    oversample_by(sentences, |s| s.label.index(), seed)
}

/// Class weights keyed by label, for display.
pub fn labeled(weights: &ClassWeights) -> Vec<(RhetoricalLabel, f64)> {
    RhetoricalLabel::ALL
        .iter()
        .zip(weights.as_slice())
        .map(|(l, w)| (*l, *w))
        .collect()
}
