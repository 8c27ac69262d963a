//! Run configuration, built-in presets and layered overrides.
//!
//! A run is resolved from three layers, later layers winning: a preset, an
//! optional JSON config file and command-line flags. The fully resolved
//! [`RunConfig`] is written next to the checkpoint and can be fed back with
//! `--config` to repeat the run exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{RhetoricalLabel, SplitMode, SplitSpec};
use crate::embedding::{
    Casing, EmbeddingError, EmbeddingProvider, HashedBow, Precomputed, TokenizerConfig,
};
use crate::imbalance::{ClassWeights, ImbalanceError, WeightScheme};
use crate::linear_model::{SelectionMetric, TrainConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMethod {
    /// Class-weighted cross-entropy.
    #[serde(alias = "weighting")]
    LossWeighting,
    /// Drop samples down to the smallest class.
    #[serde(alias = "under")]
    Undersample,
    /// Duplicate samples up to the largest class.
    #[serde(alias = "over")]
    Oversample,
    None,
}

impl FromStr for BalanceMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighting" | "loss_weighting" => Ok(BalanceMethod::LossWeighting),
            "under" | "undersample" => Ok(BalanceMethod::Undersample),
            "over" | "oversample" => Ok(BalanceMethod::Oversample),
            "none" => Ok(BalanceMethod::None),
            other => Err(format!("unknown balancing method {other:?}")),
        }
    }
}

/// Where sentence vectors come from: `hashed:<dim>` or `precomputed:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Hashed { dim: usize },
    Precomputed { path: PathBuf },
}

impl ProviderSpec {
    /// Builds the provider; hashed providers take casing and truncation from
    /// the tokenizer config.
    pub fn build(
        &self,
        tokenizer: TokenizerConfig,
    ) -> Result<Box<dyn EmbeddingProvider>, EmbeddingError> {
        match self {
            ProviderSpec::Hashed { dim } => Ok(Box::new(HashedBow::new(*dim, tokenizer)?)),
            ProviderSpec::Precomputed { path } => {
                let file = std::fs::File::open(path)?;
                Ok(Box::new(Precomputed::parse(std::io::BufReader::new(file))?))
            }
        }
    }
}

impl FromStr for ProviderSpec {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EmbeddingError::BadSpec(s.to_string());
        match s.split_once(':') {
            Some(("hashed", dim)) => match dim.parse::<usize>() {
                Ok(dim) if dim > 0 => Ok(ProviderSpec::Hashed { dim }),
                _ => Err(bad()),
            },
            Some(("precomputed", path)) if !path.is_empty() => Ok(ProviderSpec::Precomputed {
                path: PathBuf::from(path),
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProviderSpec::Hashed { dim } => write!(f, "hashed:{dim}"),
            ProviderSpec::Precomputed { path } => write!(f, "precomputed:{}", path.display()),
        }
    }
}

impl Serialize for ProviderSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProviderSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run_id: String,
    /// Preset this config was resolved from.
    pub preset: String,
    /// True when any field differs from the preset.
    pub derived: bool,
    pub casing: Casing,
    pub weight_scheme: WeightScheme,
    /// Explicit per-label weights replacing the scheme's values.
    pub weight_overrides: BTreeMap<String, f64>,
    pub balance: BalanceMethod,
    /// Token truncation bound for the hashed encoder.
    pub max_len: usize,
    pub provider: ProviderSpec,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub corpus: Option<PathBuf>,
    /// Class weights the run actually used, in label order. Written for
    /// inspection and ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_weights: Option<Vec<f64>>,
}

pub const PRESETS: [&str; 3] = ["run1", "run2", "run3"];

impl RunConfig {
    /// Built-in presets `run1` (cased, inverse-frequency weights), `run2`
    /// (uncased, inverse-frequency) and `run3` (cased, direct-frequency).
    pub fn preset(name: &str) -> Option<Self> {
        let (casing, weight_scheme) = match name {
            "run1" => (Casing::Cased, WeightScheme::InverseFrequency),
            "run2" => (Casing::Uncased, WeightScheme::InverseFrequency),
            "run3" => (Casing::Cased, WeightScheme::DirectFrequency),
            _ => return None,
        };
        Some(Self {
            run_id: name.to_string(),
            preset: name.to_string(),
            derived: false,
            casing,
            weight_scheme,
            weight_overrides: BTreeMap::new(),
            balance: BalanceMethod::LossWeighting,
            max_len: 120,
            provider: ProviderSpec::Hashed { dim: 256 },
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            corpus: None,
            resolved_weights: None,
        })
    }

    pub fn preset_for_run(id: u8) -> Option<Self> {
        Self::preset(&format!("run{id}"))
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig::new(self.casing, self.max_len)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_len == 0 {
            return invalid("max_len must be at least 1");
        }
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return invalid(format!(
                "train_fraction must lie strictly between 0 and 1, got {f}"
            ));
        }
        self.train
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.override_indices()?;
        let weighted =
            self.weight_scheme != WeightScheme::Uniform || !self.weight_overrides.is_empty();
        match (self.balance, weighted) {
            (BalanceMethod::LossWeighting, false) => invalid(
                "loss_weighting needs a non-uniform weight scheme or explicit weight overrides",
            ),
            (
                BalanceMethod::Undersample | BalanceMethod::Oversample | BalanceMethod::None,
                true,
            ) => invalid(format!(
                "balance {:?} cannot be combined with class weights; use --weights uniform",
                self.balance
            )),
            _ => Ok(()),
        }
    }

    fn override_indices(&self) -> Result<Vec<(usize, f64)>, ConfigError> {
        self.weight_overrides
            .iter()
            .map(|(name, &w)| match name.parse::<RhetoricalLabel>() {
                Ok(l) => Ok((l.index(), w)),
                Err(e) => invalid(format!("weight override: {e}")),
            })
            .collect()
    }

    /// Class weights for a training split with the given per-label counts.
    pub fn class_weights(&self, counts: &[usize]) -> Result<ClassWeights, ConfigError> {
        let base = match self.balance {
            BalanceMethod::LossWeighting => self.weight_scheme.weights(counts),
            _ => Ok(ClassWeights::uniform(counts.len())),
        };
        let overrides = self.override_indices()?;
        base.and_then(|w| w.with_overrides(overrides))
            .map_err(|e: ImbalanceError| ConfigError(format!("class weights: {e}")))
    }

    fn same_settings(&self, other: &Self) -> bool {
        let strip = |c: &Self| Self {
            run_id: String::new(),
            preset: String::new(),
            derived: false,
            corpus: None,
            resolved_weights: None,
            ..c.clone()
        };
        strip(self) == strip(other)
    }

    /// Resolves `preset`, then `layers` in order, and validates the result.
    pub fn resolve(preset: &str, layers: &[&ConfigOverlay]) -> Result<Self, ConfigError> {
        let base = match Self::preset(preset) {
            Some(p) => p,
            None => {
                return invalid(format!(
                    "unknown preset {preset:?}; expected one of {PRESETS:?}"
                ))
            }
        };
        let mut cfg = base.clone();
        for layer in layers {
            layer.apply(&mut cfg);
        }
        cfg.preset = preset.to_string();
        cfg.derived = !cfg.same_settings(&base);
        cfg.resolved_weights = None;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOverlay {
    pub train_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub mode: Option<SplitMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverlay {
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub selection_metric: Option<SelectionMetric>,
}

/// A partial [`RunConfig`]; every field is optional. A complete config file
/// is also a valid overlay.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverlay {
    pub run_id: Option<String>,
    pub preset: Option<String>,
    pub derived: Option<bool>,
    pub casing: Option<Casing>,
    pub weight_scheme: Option<WeightScheme>,
    pub weight_overrides: Option<BTreeMap<String, f64>>,
    pub balance: Option<BalanceMethod>,
    pub max_len: Option<usize>,
    pub provider: Option<ProviderSpec>,
    pub split: Option<SplitOverlay>,
    pub train: Option<TrainOverlay>,
    pub corpus: Option<PathBuf>,
    pub resolved_weights: Option<serde_json::Value>,
}

impl ConfigOverlay {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("config file: {e}")))
    }

    /// Writes every field this layer sets into `cfg`. A layer that selects
    /// resampling or no balancing without naming a weight scheme also resets
    /// the weights to uniform.
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(cfg.run_id, self.run_id);
        set!(cfg.casing, self.casing);
        set!(cfg.balance, self.balance);
        if matches!(self.balance, Some(b) if b != BalanceMethod::LossWeighting)
            && self.weight_scheme.is_none()
            && self.weight_overrides.is_none()
        {
            cfg.weight_scheme = WeightScheme::Uniform;
            cfg.weight_overrides.clear();
        }
        set!(cfg.weight_scheme, self.weight_scheme);
        set!(cfg.weight_overrides, self.weight_overrides);
        set!(cfg.max_len, self.max_len);
        set!(cfg.provider, self.provider);
        if let Some(c) = &self.corpus {
            cfg.corpus = Some(c.clone());
        }
        if let Some(s) = &self.split {
            set!(cfg.split.train_fraction, s.train_fraction);
            set!(cfg.split.seed, s.seed);
            set!(cfg.split.mode, s.mode);
        }
        if let Some(t) = &self.train {
            set!(cfg.train.batch_size, t.batch_size);
            set!(cfg.train.epochs, t.epochs);
            set!(cfg.train.learning_rate, t.learning_rate);
            set!(cfg.train.weight_decay, t.weight_decay);
            set!(cfg.train.beta1, t.beta1);
            set!(cfg.train.beta2, t.beta2);
            set!(cfg.train.epsilon, t.epsilon);
            set!(cfg.train.seed, t.seed);
            set!(cfg.train.selection_metric, t.selection_metric);
        }
    }
}
