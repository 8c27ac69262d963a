//! AdamW: Adam moments with weight decay applied directly to the parameters.

use serde::{Deserialize, Serialize};

use super::params::{Gradients, LinearParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// One AdamW update of a flat parameter slice; `t` is the 1-based step.
///
/// ```text
/// m = b1 m + (1 - b1) g
/// v = b2 v + (1 - b2) g^2
/// p = p (1 - lr wd) - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
pub fn adamw_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamWConfig,
) {
    assert!(t >= 1, "step counter starts at 1");
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let step = (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        *p = *p * decay - cfg.learning_rate * step;
    }
}

/// First and second moments for every parameter plus the completed-step count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    m_weights: Vec<f64>,
    v_weights: Vec<f64>,
    m_bias: Vec<f64>,
    v_bias: Vec<f64>,
    steps: u64,
}

impl OptimizerState {
    pub fn new(params: &LinearParams) -> Self {
        let nw = params.weights.as_slice().len();
        let nb = params.bias.len();
        Self {
            m_weights: vec![0.0; nw],
            v_weights: vec![0.0; nw],
            m_bias: vec![0.0; nb],
            v_bias: vec![0.0; nb],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut LinearParams, grads: &Gradients, cfg: &AdamWConfig) {
        assert_eq!(params.weights.shape(), grads.d_weights.shape());
        assert_eq!(params.bias.len(), grads.d_bias.len());
        self.steps += 1;
        adamw_update(
            params.weights.as_mut_slice(),
            grads.d_weights.as_slice(),
            &mut self.m_weights,
            &mut self.v_weights,
            self.steps,
            cfg,
        );
        adamw_update(
            &mut params.bias,
            &grads.d_bias,
            &mut self.m_bias,
            &mut self.v_bias,
            self.steps,
            cfg,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(weight_decay: f64) -> AdamWConfig {
        AdamWConfig {
            weight_decay,
            ..AdamWConfig::default()
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let (mut p, mut m, mut v) = ([0.0], [0.0], [0.0]);
        adamw_update(&mut p, &[1.0], &mut m, &mut v, 1, &cfg(0.0));
        // bias-corrected moments are exactly g and g^2 on the first step
        assert!((p[0] + 2e-5 / (1.0 + 1e-8)).abs() < 1e-20);
        assert!((p[0] + 2e-5).abs() < 1e-12);
        assert!(v[0] >= 0.0);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = [0.3, -1.5, 7.0];
        let before = p;
        let (mut m, mut v) = ([0.0; 3], [0.0; 3]);
        for t in 1..=5 {
            adamw_update(&mut p, &[0.0; 3], &mut m, &mut v, t, &cfg(0.0));
        }
        assert_eq!(p, before);
    }

    #[test]
    fn zero_gradient_with_decay_shrinks() {
        let mut p = [0.3, -1.5, 7.0];
        let before = p;
        let (mut m, mut v) = ([0.0; 3], [0.0; 3]);
        adamw_update(&mut p, &[0.0; 3], &mut m, &mut v, 1, &cfg(0.01));
        for (a, b) in p.iter().zip(before) {
            assert_eq!(*a, b * (1.0 - 2e-5 * 0.01));
        }
    }

    #[test]
    fn decay_is_not_routed_through_moments() {
        let mut p = [10.0];
        let (mut m, mut v) = ([0.0], [0.0]);
        adamw_update(&mut p, &[0.0], &mut m, &mut v, 1, &cfg(0.5));
        assert_eq!((m[0], v[0]), (0.0, 0.0));
    }

    #[test]
    fn state_counts_steps() {
        let mut params = LinearParams::zeros(2, 3);
        let mut state = OptimizerState::new(&params);
        let grads = params.backward(&[1.0, 0.0, -1.0], &[0.5, -0.5]).unwrap();
        state.step(&mut params, &grads, &cfg(0.0));
        state.step(&mut params, &grads, &cfg(0.0));
        assert_eq!(state.steps(), 2);
        assert!(params.weights[(0, 0)] < 0.0 && params.weights[(1, 0)] > 0.0);
        assert_eq!(params.weights[(0, 1)], 0.0);
    }
}
