use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_gradient, weighted_ce_loss};
use super::optim::{AdamWConfig, OptimizerState};
use super::params::{argmax, Gradients, LinearParams};
use super::{LinearCheckpoint, ModelError};
use crate::corpus::{LabeledSentence, RhetoricalLabel, NUM_LABELS};
use crate::embedding::{embed_texts, EmbeddingProvider};
use crate::imbalance::ClassWeights;
use crate::matrix::Matrix;
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Highest validation macro F1.
    MacroF1,
    /// Lowest mean weighted validation loss.
    ValLoss,
}

impl std::str::FromStr for SelectionMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro_f1" => Ok(SelectionMetric::MacroF1),
            "val_loss" => Ok(SelectionMetric::ValLoss),
            other => Err(format!("unknown selection metric {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub selection_metric: SelectionMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = AdamWConfig::default();
        Self {
            batch_size: 8,
            epochs: 4,
            learning_rate: opt.learning_rate,
            weight_decay: opt.weight_decay,
            beta1: opt.beta1,
            beta2: opt.beta2,
            epsilon: opt.epsilon,
            seed: 42,
            selection_metric: SelectionMetric::MacroF1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }
}

/// Embedded samples with class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<usize>) -> Self {
        assert_eq!(x.rows(), y.len(), "one label per row");
        Self { x, y }
    }

    pub fn embed(
        sentences: &[LabeledSentence],
        provider: &dyn EmbeddingProvider,
        exec: Execution,
    ) -> Result<Self, ModelError> {
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        let x = embed_texts(&texts, provider, exec)?;
        Ok(Self::new(
            x,
            sentences.iter().map(|s| s.label.index()).collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Mean weighted loss and mean gradient over the samples `idx`.
///
/// Per-sample logits and gradients are computed independently; the reduction
/// sums samples in `idx` order, so the result does not depend on `exec`.
pub fn batch_gradient(
    params: &LinearParams,
    data: &Dataset,
    idx: &[usize],
    weights: &ClassWeights,
    exec: Execution,
) -> (f64, Gradients) {
    let k = params.num_classes();
    let d = params.dim();
    let n = idx.len() as f64;
    let per_sample: Vec<(f64, Vec<f64>)> = exec.map(idx, |&i| {
        let z = params.logits(data.x.row(i));
        let y = data.y[i];
        (
            weighted_ce_loss(&z, y, weights),
            loss_gradient(&z, y, weights),
        )
    });

    let loss = per_sample.iter().map(|(l, _)| l).sum::<f64>() / n;
    let mut d_weights = Matrix::zeros(k, d);
    exec.for_each_chunk_mut(d_weights.as_mut_slice(), d, |r, row| {
        for (&i, (_, g)) in idx.iter().zip(&per_sample) {
            let gr = g[r];
            if gr != 0.0 {
                for (dst, xv) in row.iter_mut().zip(data.x.row(i)) {
                    *dst += gr * xv;
                }
            }
        }
        row.iter_mut().for_each(|v| *v /= n);
    });
    let d_bias = (0..k)
        .map(|r| per_sample.iter().map(|(_, g)| g[r]).sum::<f64>() / n)
        .collect();
    (loss, Gradients { d_weights, d_bias })
}

/// Mean weighted loss and argmax predictions over a whole dataset.
pub fn evaluate(
    params: &LinearParams,
    data: &Dataset,
    weights: &ClassWeights,
    exec: Execution,
) -> (f64, Vec<usize>) {
    let out: Vec<(f64, usize)> = exec.map_range(data.len(), |i| {
        let z = params.logits(data.x.row(i));
        (weighted_ce_loss(&z, data.y[i], weights), argmax(&z))
    });
    let loss = out.iter().map(|(l, _)| l).sum::<f64>() / data.len() as f64;
    (loss, out.into_iter().map(|(_, p)| p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
    pub val_accuracy: f64,
}

impl EpochRecord {
    fn score(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::MacroF1 => self.val_macro_f1,
            SelectionMetric::ValLoss => self.val_loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: LinearParams,
    pub best_epoch: usize,
    pub best_score: f64,
    pub history: Vec<EpochRecord>,
}

fn improves(metric: SelectionMetric, candidate: f64, best: f64) -> bool {
    match metric {
        SelectionMetric::MacroF1 => candidate > best,
        SelectionMetric::ValLoss => candidate < best,
    }
}

/// Mini-batch AdamW training over `classes` classes.
///
/// Epoch `e` shuffles the training indices with a generator seeded by
/// `(seed, e)`; the last batch may be short. The parameters of the best
/// validation epoch are returned, ties going to the earlier epoch.
pub fn fit(
    train: &Dataset,
    val: &Dataset,
    classes: usize,
    weights: &ClassWeights,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<FitOutcome, ModelError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyData("training"));
    }
    if val.is_empty() {
        return Err(ModelError::EmptyData("validation"));
    }
    if weights.len() != classes {
        return Err(ModelError::WeightCount {
            weights: weights.len(),
            classes,
        });
    }
    let dim = train.x.cols();
    if val.x.cols() != dim {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            got: val.x.cols(),
        });
    }
    if let Some(&bad) = train.y.iter().chain(&val.y).find(|&&y| y >= classes) {
        return Err(ModelError::LabelOutOfRange(bad));
    }

    let opt = cfg.optimizer();
    let mut params = LinearParams::init(classes, dim, cfg.seed);
    let mut state = OptimizerState::new(&params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(usize, f64, LinearParams)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_gradient(&params, train, batch, weights, exec);
            loss_sum += loss * batch.len() as f64;
            state.step(&mut params, &grads, &opt);
        }
        if !params.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "parameters diverged in epoch {epoch}; lower the learning rate"
            )));
        }

        let (val_loss, pred) = evaluate(&params, val, weights, exec);
        let cm = ConfusionMatrix::from_indices(&val.y, &pred, classes)
            .expect("validation set is non-empty and labels are in range");
        let names = (0..classes).map(|c| c.to_string()).collect();
        let report = MetricsReport::new(cm, names);
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_macro_f1: report.macro_avg.f1,
            val_accuracy: report.accuracy(),
        };
        let score = record.score(cfg.selection_metric);
        history.push(record);
        if best
            .as_ref()
            .is_none_or(|(_, b, _)| improves(cfg.selection_metric, score, *b))
        {
            best = Some((epoch, score, params.clone()));
        }
    }

    let (best_epoch, best_score, params) = best.expect("at least one epoch ran");
    Ok(FitOutcome {
        params,
        best_epoch,
        best_score,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: LinearCheckpoint,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Embeds both sets with `provider` and fits a seven-class head.
pub fn train(
    train_set: &[LabeledSentence],
    val_set: &[LabeledSentence],
    provider: &dyn EmbeddingProvider,
    weights: &ClassWeights,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    train_with(
        train_set,
        val_set,
        provider,
        weights,
        cfg,
        Execution::default(),
    )
}

pub fn train_with(
    train_set: &[LabeledSentence],
    val_set: &[LabeledSentence],
    provider: &dyn EmbeddingProvider,
    weights: &ClassWeights,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptyData("training"));
    }
    if val_set.is_empty() {
        return Err(ModelError::EmptyData("validation"));
    }
    let train = Dataset::embed(train_set, provider, exec)?;
    let val = Dataset::embed(val_set, provider, exec)?;
    let fit = fit(&train, &val, NUM_LABELS, weights, cfg, exec)?;
    Ok(TrainOutcome {
        checkpoint: LinearCheckpoint {
            params: fit.params,
            labels: RhetoricalLabel::ALL.to_vec(),
            provider_id: provider.id(),
            selection_score: Some(fit.best_score),
        },
        best_epoch: fit.best_epoch,
        history: fit.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Two Gaussian-ish blobs separated along a random direction with a margin.
    fn separable(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        while rows.len() < n {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = x.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / norm;
            if s.abs() < 0.2 {
                continue;
            }
            y.push(usize::from(s > 0.0));
            rows.push(x);
        }
        Dataset::new(Matrix::from_rows(rows, d).unwrap(), y)
    }

    /// Perceptron: confirms the toy data admits a zero-error linear separator.
    fn perceptron_errors(data: &Dataset) -> usize {
        let d = data.x.cols();
        let mut w = vec![0.0; d + 1];
        let predict =
            |w: &[f64], x: &[f64]| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[d] > 0.0;
        for _ in 0..1000 {
            let mut mistakes = 0;
            for (x, &y) in data.x.iter_rows().zip(&data.y) {
                if predict(&w, x) != (y == 1) {
                    let s = if y == 1 { 1.0 } else { -1.0 };
                    w.iter_mut().zip(x).for_each(|(wi, xi)| *wi += s * xi);
                    w[d] += s;
                    mistakes += 1;
                }
            }
            if mistakes == 0 {
                return 0;
            }
        }
        data.x
            .iter_rows()
            .zip(&data.y)
            .filter(|(x, &y)| predict(&w, x) != (y == 1))
            .count()
    }

    fn toy_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_separable_two_class_toy() {
        let all = separable(250, 8, 3);
        assert_eq!(perceptron_errors(&all), 0);
        let idx: Vec<usize> = (0..all.len()).collect();
        let train = Dataset::new(all.x.select_rows(&idx[..200]), all.y[..200].to_vec());
        let val = Dataset::new(all.x.select_rows(&idx[200..]), all.y[200..].to_vec());
        let out = fit(
            &train,
            &val,
            2,
            &ClassWeights::uniform(2),
            &toy_cfg(20),
            Execution::default(),
        )
        .unwrap();
        let best = out.history[out.best_epoch - 1];
        assert!(best.val_accuracy >= 0.95, "{:?}", out.history);
    }

    #[test]
    fn single_epoch_returns_epoch_one() {
        let d = separable(40, 4, 1);
        let out = fit(
            &d,
            &d,
            2,
            &ClassWeights::uniform(2),
            &toy_cfg(1),
            Execution::default(),
        )
        .unwrap();
        assert_eq!(out.best_epoch, 1);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn deterministic_and_mode_independent() {
        let d = separable(120, 6, 9);
        let w = ClassWeights::new(vec![0.7, 1.9]).unwrap();
        let a = fit(&d, &d, 2, &w, &toy_cfg(5), Execution::Sequential).unwrap();
        let b = fit(&d, &d, 2, &w, &toy_cfg(5), Execution::Sequential).unwrap();
        let c = fit(&d, &d, 2, &w, &toy_cfg(5), Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ties_keep_the_earlier_epoch() {
        // with weight 0 on every sample of class 1 and no class-0 samples,
        // gradients vanish apart from decay and predictions never change
        let x = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let d = Dataset::new(x, vec![1, 1]);
        let w = ClassWeights::new(vec![1.0, 0.0]).unwrap();
        let out = fit(&d, &d, 2, &w, &toy_cfg(3), Execution::default()).unwrap();
        assert_eq!(out.best_epoch, 1);
    }

    #[test]
    fn batch_gradient_is_mean_of_samples() {
        let d = separable(10, 3, 5);
        let p = LinearParams::init(2, 3, 8);
        let w = ClassWeights::new(vec![2.0, 0.5]).unwrap();
        let idx = [3, 1, 7];
        let (loss, g) = batch_gradient(&p, &d, &idx, &w, Execution::Sequential);
        let mut want = LinearParams::zeros(2, 3);
        let mut want_loss = 0.0;
        for &i in &idx {
            let z = p.forward(d.x.row(i)).unwrap();
            want_loss += weighted_ce_loss(&z, d.y[i], &w) / 3.0;
            let gi = p
                .backward(d.x.row(i), &loss_gradient(&z, d.y[i], &w))
                .unwrap();
            for (a, b) in want
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(gi.d_weights.as_slice())
            {
                *a += b / 3.0;
            }
        }
        assert!((loss - want_loss).abs() < 1e-12);
        for (a, b) in g.d_weights.as_slice().iter().zip(want.weights.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = separable(10, 3, 5);
        let empty = Dataset::new(Matrix::zeros(0, 3), vec![]);
        let w = ClassWeights::uniform(2);
        let cfg = toy_cfg(1);
        let e = Execution::Sequential;
        assert!(matches!(
            fit(&empty, &d, 2, &w, &cfg, e),
            Err(ModelError::EmptyData("training"))
        ));
        assert!(matches!(
            fit(&d, &empty, 2, &w, &cfg, e),
            Err(ModelError::EmptyData("validation"))
        ));
        assert!(matches!(
            fit(&d, &d, 3, &w, &cfg, e),
            Err(ModelError::WeightCount { .. })
        ));
        let bad = TrainConfig {
            batch_size: 0,
            ..cfg
        };
        assert!(matches!(
            fit(&d, &d, 2, &w, &bad, e),
            Err(ModelError::InvalidConfig(_))
        ));
        let bad = TrainConfig { beta2: 1.0, ..cfg };
        assert!(bad.validate().is_err());
    }
}
