use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::matrix::Matrix;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Weight matrix (`classes x dim`) and bias (`classes`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients with the same shapes as [`LinearParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Matrix,
    pub d_bias: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: Matrix::zeros(classes, dim),
            bias: vec![0.0; classes],
        }
    }

    /// Weights uniform in `[-1/sqrt(dim), 1/sqrt(dim))`, zero bias.
    pub fn init(classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim as f64).sqrt();
        let mut p = Self::zeros(classes, dim);
        for w in p.weights.as_mut_slice() {
            *w = rng.gen_range(-bound..bound);
        }
        p
    }

    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self, ModelError> {
        if weights.rows() != bias.len() {
            return Err(ModelError::DimensionMismatch {
                expected: weights.rows(),
                got: bias.len(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// `z = W x + b`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_dim(x)?;
        Ok(self.logits(x))
    }

    pub(crate) fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Chain rule through the layer: `dW = g x^T`, `db = g`.
    pub fn backward(&self, x: &[f64], g: &[f64]) -> Result<Gradients, ModelError> {
        self.check_dim(x)?;
        if g.len() != self.num_classes() {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_classes(),
                got: g.len(),
            });
        }
        let mut d_weights = Matrix::zeros(g.len(), x.len());
        for (r, gr) in g.iter().enumerate() {
            for (dst, xv) in d_weights.row_mut(r).iter_mut().zip(x) {
                *dst = gr * xv;
            }
        }
        Ok(Gradients {
            d_weights,
            d_bias: g.to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .as_slice()
            .iter()
            .chain(&self.bias)
            .all(|v| v.is_finite())
    }
}
