use rand_distr::{Distribution, StandardNormal};

use super::{checked_probs, softmax, ClassifierOracle, MlpOracle, OracleError};
use crate::image::Image;
use crate::models::mlp::{Activation, Layer};
use crate::objective::ProbVector;
use crate::rng::RandomStream;

/// `softmax(W x + b)` with weights drawn from a seeded standard normal
/// scaled by `1 / sqrt(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSoftmaxOracle {
    /// `K x d`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
    input_dim: usize,
}

impl LinearSoftmaxOracle {
    /// Deterministic in `(seed, input_dim, num_classes)`. Weights are drawn
    /// row by row, then the bias.
    pub fn from_seed(seed: u64, input_dim: usize, num_classes: usize) -> Self {
        assert!(input_dim > 0 && num_classes > 0);
        let mut rng = RandomStream::new(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let mut draw = || {
            let z: f64 = StandardNormal.sample(rng.inner());
            z * scale
        };
        let weights = (0..input_dim * num_classes).map(|_| draw()).collect();
        let bias = (0..num_classes).map(|_| draw()).collect();
        Self {
            weights,
            bias,
            input_dim,
        }
    }

    /// Seeded oracle for `height x width` RGB images.
    pub fn for_images(seed: u64, height: usize, width: usize, num_classes: usize) -> Self {
        Self::from_seed(seed, height * width * 3, num_classes)
    }

    pub fn from_parts(weights: Vec<f64>, bias: Vec<f64>, input_dim: usize) -> Self {
        assert!(!bias.is_empty() && input_dim > 0);
        assert_eq!(weights.len(), bias.len() * input_dim, "weights must be K x d");
        Self {
            weights,
            bias,
            input_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn logits(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.input_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// The same model as a one-layer MLP.
    pub fn to_mlp(&self) -> MlpOracle {
        MlpOracle::new(vec![Layer::new(
            self.input_dim,
            self.bias.len(),
            self.weights.clone(),
            self.bias.clone(),
            Activation::Identity,
        )
        .expect("dimensions are consistent")])
        .expect("single layer chain")
    }
}

impl ClassifierOracle for LinearSoftmaxOracle {
    fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError> {
        if image.len() != self.input_dim {
            return Err(OracleError::DimensionMismatch {
                expected: self.input_dim,
                got: image.len(),
            });
        }
        checked_probs(softmax(&self.logits(image.as_slice())), self.num_classes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let o = LinearSoftmaxOracle::from_parts(vec![0.0; 12 * 4], vec![0.0; 4], 12);
        let p = o.probabilities(&Image::filled(2, 2, 0.7)).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn bias_only_softmax() {
        let k = 5;
        let mut bias = vec![0.0; k];
        bias[0] = 10.0;
        let o = LinearSoftmaxOracle::from_parts(vec![0.0; 3 * k], bias, 3);
        let p = o.probabilities(&Image::zeros(1, 1)).unwrap();
        let e = 10f64.exp();
        assert!((p.get(0) - e / (e + (k - 1) as f64)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_dimension_checked() {
        let a = LinearSoftmaxOracle::for_images(3, 4, 4, 10);
        let b = LinearSoftmaxOracle::for_images(3, 4, 4, 10);
        assert_eq!(a, b);
        assert_ne!(a, LinearSoftmaxOracle::for_images(4, 4, 4, 10));
        assert!(matches!(
            a.probabilities(&Image::zeros(4, 5)),
            Err(OracleError::DimensionMismatch { expected: 48, got: 60 })
        ));
    }
}
