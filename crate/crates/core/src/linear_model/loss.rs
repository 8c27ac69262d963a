use crate::imbalance::ClassWeights;

use super::params::argmax;

/// Maximum logit and `sum_{j != argmax} exp(z_j - max)`.
fn max_and_tail(z: &[f64]) -> (f64, f64) {
    let top = argmax(z);
    let m = z[top];
    let tail = z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &v)| (v - m).exp())
        .sum();
    (m, tail)
}

/// `log(sum(exp(z)))`, shifted by the maximum.
pub fn log_sum_exp(z: &[f64]) -> f64 {
    let (m, tail) = max_and_tail(z);
    m + tail.ln_1p()
}

/// Numerically stable softmax: `exp(z_i - max z) / sum_j exp(z_j - max z)`.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `-log softmax(z)[class]`, computed as `(max z - z_class) + ln_1p(...)` so
/// that confident correct predictions keep full relative precision.
pub fn cross_entropy(z: &[f64], class: usize) -> f64 {
    let (m, tail) = max_and_tail(z);
    (m - z[class]) + tail.ln_1p()
}

/// `weights[class] * -log softmax(z)[class]`.
pub fn weighted_ce_loss(z: &[f64], class: usize, weights: &ClassWeights) -> f64 {
    weights.get(class) * cross_entropy(z, class)
}

/// Gradient of [`weighted_ce_loss`] with respect to the logits:
/// `weights[class] * (softmax(z) - onehot(class))`.
pub fn loss_gradient(z: &[f64], class: usize, weights: &ClassWeights) -> Vec<f64> {
    let w = weights.get(class);
    let mut g = softmax(z);
    g[class] -= 1.0;
    g.iter_mut().for_each(|v| *v *= w);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform7() -> ClassWeights {
        ClassWeights::uniform(7)
    }

    #[test]
    fn softmax_examples() {
        for p in softmax(&[0.0; 7]) {
            assert!((p - 1.0 / 7.0).abs() < 1e-15);
        }
        // reference values from an arbitrary-precision evaluation
        let p = softmax(&[2.0, 1.0, 0.0]);
        for (got, want) in p.iter().zip([0.66524, 0.24473, 0.09003]) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
        let huge = softmax(&[1000.0, 999.0, 990.0]);
        assert!(huge.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!((huge.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        assert!((weighted_ce_loss(&[0.0; 7], 3, &uniform7()) - 1.945910).abs() < 1e-6);
        assert!((weighted_ce_loss(&[0.0; 7], 3, &uniform7()) - 7f64.ln()).abs() < 1e-15);
        let w = ClassWeights::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert!((weighted_ce_loss(&[2.0, 1.0, 0.0], 0, &w) - 0.81522).abs() < 1e-5);
        let zero = ClassWeights::new(vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(weighted_ce_loss(&[-5.0, 40.0, 3.0], 0, &zero), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let g = loss_gradient(&[0.0; 7], 0, &uniform7());
        assert!((g[0] + 6.0 / 7.0).abs() < 1e-15);
        assert!(g[1..].iter().all(|v| (v - 1.0 / 7.0).abs() < 1e-15));
        let zero = ClassWeights::new(vec![0.0, 1.0, 1.0]).unwrap();
        assert!(loss_gradient(&[1.0, 2.0, 3.0], 0, &zero)
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn no_overflow_on_extreme_logits() {
        let z = [800.0, -800.0, 0.0];
        assert!((cross_entropy(&z, 1) - 1600.0).abs() < 1e-9);
        assert!(cross_entropy(&z, 0) >= 0.0);
        assert!((log_sum_exp(&z) - 800.0).abs() < 1e-12);
    }

    fn logits() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0f64..20.0, 2..9)
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(z in logits(), c in -50.0f64..50.0) {
            let p = softmax(&z);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| *v > 0.0));
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn loss_is_non_negative_and_scales(z in logits(), lambda in 0.01f64..100.0, seed in any::<usize>()) {
            let k = z.len();
            let class = seed % k;
            let w = ClassWeights::new((0..k).map(|i| 0.5 + i as f64).collect()).unwrap();
            let scaled = w.scaled(lambda).unwrap();
            let l = weighted_ce_loss(&z, class, &w);
            prop_assert!(l >= 0.0);
            let ls = weighted_ce_loss(&z, class, &scaled);
            prop_assert!((ls - lambda * l).abs() <= 1e-12 * ls.abs().max(1e-300));
            let g = loss_gradient(&z, class, &w);
            for (a, b) in g.iter().zip(loss_gradient(&z, class, &scaled)) {
                prop_assert!((b - lambda * a).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }
}
