//! Confusion matrix and macro-averaged precision, recall and F1.
//!
//! Any 0/0 ratio is defined as 0. Macro values are unweighted means over all
//! classes, zero-support classes included, and macro F1 is the mean of the
//! per-class F1 scores (not the harmonic mean of macro P and R).

use serde_json::{json, Map, Value};

use crate::corpus::RhetoricalLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
}

/// Entry `(i, j)` counts samples of gold class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_indices(gold: &[usize], pred: &[usize], k: usize) -> Result<Self, MetricsError> {
        if gold.len() != pred.len() {
            return Err(MetricsError::LengthMismatch {
                gold: gold.len(),
                pred: pred.len(),
            });
        }
        if gold.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut counts = vec![0u64; k * k];
        for (&g, &p) in gold.iter().zip(pred) {
            if let Some(&index) = [g, p].iter().find(|&&c| c >= k) {
                return Err(MetricsError::ClassOutOfRange { index, classes: k });
            }
            counts[g * k + p] += 1;
        }
        Ok(Self { k, counts })
    }

    pub fn from_labels(
        gold: &[RhetoricalLabel],
        pred: &[RhetoricalLabel],
    ) -> Result<Self, MetricsError> {
        let g: Vec<usize> = gold.iter().map(|l| l.index()).collect();
        let p: Vec<usize> = pred.iter().map(|l| l.index()).collect();
        Self::from_indices(&g, &p, RhetoricalLabel::ALL.len())
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.k.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    /// Per-class scores in class order.
    pub fn per_class(&self) -> Vec<ClassScores> {
        (0..self.k)
            .map(|c| {
                let tp = self.get(c, c);
                let predicted: u64 = (0..self.k).map(|g| self.get(g, c)).sum();
                let support: u64 = (0..self.k).map(|p| self.get(c, p)).sum();
                ClassScores::from_counts(tp, predicted - tp, support - tp)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl ClassScores {
    /// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), with 0/0 = 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp as f64, (tp + fp) as f64);
        let recall = ratio(tp as f64, (tp + fn_) as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        Self {
            precision,
            recall,
            f1,
            support: tp + fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted means over all classes, summed in class order.
pub fn macro_average(per_class: &[ClassScores]) -> MacroScores {
    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    MacroScores {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassScores>,
    pub macro_avg: MacroScores,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn new(confusion: ConfusionMatrix, class_names: Vec<String>) -> Self {
        assert_eq!(class_names.len(), confusion.num_classes());
        let per_class = confusion.per_class();
        let macro_avg = macro_average(&per_class);
        Self {
            class_names,
            per_class,
            macro_avg,
            confusion,
        }
    }

    pub fn for_labels(
        gold: &[RhetoricalLabel],
        pred: &[RhetoricalLabel],
    ) -> Result<Self, MetricsError> {
        Ok(Self::new(
            ConfusionMatrix::from_labels(gold, pred)?,
            RhetoricalLabel::names(),
        ))
    }

    pub fn accuracy(&self) -> f64 {
        let cm = &self.confusion;
        let correct: u64 = (0..cm.num_classes()).map(|c| cm.get(c, c)).sum();
        ratio(correct as f64, cm.total() as f64)
    }

    /// JSON document: class order, per-class block keyed by class name,
    /// macro block, support per class and the row-major confusion matrix.
    pub fn to_json(&self) -> Value {
        let mut per_class = Map::new();
        let mut support = Map::new();
        for (name, s) in self.class_names.iter().zip(&self.per_class) {
            per_class.insert(
                name.clone(),
                json!({ "precision": s.precision, "recall": s.recall, "f1": s.f1 }),
            );
            support.insert(name.clone(), json!(s.support));
        }
        json!({
            "labels": self.class_names,
            "per_class": per_class,
            "macro": {
                "precision": self.macro_avg.precision,
                "recall": self.macro_avg.recall,
                "f1": self.macro_avg.f1,
            },
            "accuracy": self.accuracy(),
            "support": support,
            "total": self.confusion.total(),
            "confusion_matrix": self.confusion.rows(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn perfect_predictions_are_diagonal() {
        let y = [0, 2, 2, 1, 0, 2];
        let cm = ConfusionMatrix::from_indices(&y, &y, 3).unwrap();
        assert_eq!(cm.rows(), vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 3]]);
        let r = MetricsReport::new(cm, vec!["a".into(), "b".into(), "c".into()]);
        assert!(r
            .per_class
            .iter()
            .all(|s| s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0));
        assert_eq!(r.macro_avg.f1, 1.0);
    }

    #[test]
    fn two_label_harness() {
        let cm = ConfusionMatrix::from_indices(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 1], vec![0, 1]]);
        let pc = cm.per_class();
        assert!((pc[0].precision - 1.0).abs() < EPS);
        assert!((pc[0].recall - 0.5).abs() < EPS);
        assert!((pc[0].f1 - 2.0 / 3.0).abs() < EPS);
        assert!((pc[1].precision - 0.5).abs() < EPS);
        assert!((pc[1].recall - 1.0).abs() < EPS);
        assert!((pc[1].f1 - 2.0 / 3.0).abs() < EPS);
        let m = macro_average(&pc);
        assert!((m.precision - 0.75).abs() < EPS);
        assert!((m.recall - 0.75).abs() < EPS);
        assert!((m.f1 - 2.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn absent_class_scores_zero_and_counts_in_macro() {
        let cm = ConfusionMatrix::from_indices(&[0, 1], &[0, 1], 3).unwrap();
        let pc = cm.per_class();
        assert_eq!(
            (pc[2].precision, pc[2].recall, pc[2].f1, pc[2].support),
            (0.0, 0.0, 0.0, 0)
        );
        assert!((macro_average(&pc).f1 - 2.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn input_errors() {
        assert_eq!(
            ConfusionMatrix::from_indices(&[], &[], 2),
            Err(MetricsError::Empty)
        );
        assert_eq!(
            ConfusionMatrix::from_indices(&[0], &[0, 1], 2),
            Err(MetricsError::LengthMismatch { gold: 1, pred: 2 })
        );
        assert_eq!(
            ConfusionMatrix::from_indices(&[0], &[2], 2),
            Err(MetricsError::ClassOutOfRange {
                index: 2,
                classes: 2
            })
        );
    }

    #[test]
    fn json_layout() {
        use RhetoricalLabel::*;
        let r = MetricsReport::for_labels(&[Facts, Statute, Statute], &[Facts, Statute, Facts])
            .unwrap();
        let v = r.to_json();
        assert_eq!(v["labels"][6], "Ruling by Present Court");
        assert_eq!(v["per_class"]["Facts"]["precision"], 0.5);
        assert_eq!(v["support"]["Statute"], 2);
        assert_eq!(v["confusion_matrix"][3][0], 1);
        assert_eq!(v["confusion_matrix"].as_array().unwrap().len(), 7);
        let keys: Vec<&String> = v["per_class"].as_object().unwrap().keys().collect();
        assert_eq!(keys[1], "Ruling by Lower Court");
    }

    fn pairs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..6).prop_flat_map(|k| (Just(k), prop::collection::vec((0..k, 0..k), 1..40)))
    }

    proptest! {
        #[test]
        fn metrics_bounded_and_f1_between_p_and_r((k, data) in pairs()) {
            let (g, p): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            let cm = ConfusionMatrix::from_indices(&g, &p, k).unwrap();
            prop_assert_eq!(cm.total(), g.len() as u64);
            for s in cm.per_class() {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(s.f1 <= s.precision.max(s.recall) + EPS);
                if s.precision > 0.0 && s.recall > 0.0 {
                    prop_assert!(s.f1 >= s.precision.min(s.recall) - EPS);
                }
            }
        }

        #[test]
        fn joint_permutation_is_invisible((k, data) in pairs(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (g1, p1): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            let (g2, p2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(
                ConfusionMatrix::from_indices(&g1, &p1, k).unwrap(),
                ConfusionMatrix::from_indices(&g2, &p2, k).unwrap()
            );
        }

        #[test]
        fn relabeling_permutes_per_class((k, data) in pairs(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (g, p): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            let g2: Vec<usize> = g.iter().map(|&c| perm[c]).collect();
            let p2: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
            let a = ConfusionMatrix::from_indices(&g, &p, k).unwrap().per_class();
            let b = ConfusionMatrix::from_indices(&g2, &p2, k).unwrap().per_class();
            for c in 0..k {
                prop_assert_eq!(a[c], b[perm[c]]);
            }
            let (ma, mb) = (macro_average(&a), macro_average(&b));
            prop_assert!((ma.f1 - mb.f1).abs() < EPS);
            prop_assert!((ma.precision - mb.precision).abs() < EPS);
            prop_assert!((ma.recall - mb.recall).abs() < EPS);
        }
    }
}
