use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{checked_probs, softmax, ClassifierOracle, OracleError};
use crate::image::Image;
use crate::objective::ProbVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Error)]
pub enum WeightFileError {
    #[error("cannot read weight file: {0}")]
    Io(#[from] std::io::Error),
    #[error("weight file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("weight file lists {arch} layers but {weights} weight and {biases} bias arrays")]
    LayerCount {
        arch: usize,
        weights: usize,
        biases: usize,
    },
    #[error("layer {layer}: expected {expected} {what}, got {got}")]
    Size {
        layer: usize,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("layer {layer} takes {input} inputs but the previous layer produces {previous}")]
    Chain {
        layer: usize,
        input: usize,
        previous: usize,
    },
    #[error("layer {layer} has a zero dimension")]
    ZeroDimension { layer: usize },
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer} contains a non-finite parameter")]
    NonFinite { layer: usize },
}

/// One dense layer: `act(W a + b)` with `W` stored `out x in`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    input: usize,
    output: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(
        input: usize,
        output: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, WeightFileError> {
        Self::checked(0, input, output, weights, bias, activation)
    }

    fn checked(
        layer: usize,
        input: usize,
        output: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, WeightFileError> {
        if input == 0 || output == 0 {
            return Err(WeightFileError::ZeroDimension { layer });
        }
        if weights.len() != input * output {
            return Err(WeightFileError::Size {
                layer,
                what: "weights",
                expected: input * output,
                got: weights.len(),
            });
        }
        if bias.len() != output {
            return Err(WeightFileError::Size {
                layer,
                what: "biases",
                expected: output,
                got: bias.len(),
            });
        }
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(WeightFileError::NonFinite { layer });
        }
        Ok(Self {
            input,
            output,
            weights,
            bias,
            activation,
        })
    }

    fn forward(&self, a: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.input)
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = b + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>();
                match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity => z,
                }
            })
            .collect()
    }
}

/// Layer shape entry of the weight file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(rename = "in")]
    pub input: usize,
    #[serde(rename = "out")]
    pub output: usize,
    pub activation: Activation,
}

/// JSON weight file: `{"arch": [...], "weights": [[...]], "biases": [[...]]}`.
/// Each weight array is the `out x in` matrix flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub arch: Vec<LayerSpec>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Dense network with a softmax on the last layer.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpOracle {
    layers: Vec<Layer>,
}

impl MlpOracle {
    pub fn new(layers: Vec<Layer>) -> Result<Self, WeightFileError> {
        if layers.is_empty() {
            return Err(WeightFileError::Empty);
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].input != pair[0].output {
                return Err(WeightFileError::Chain {
                    layer: i + 1,
                    input: pair[1].input,
                    previous: pair[0].output,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn from_weight_file(file: WeightFile) -> Result<Self, WeightFileError> {
        let (n, nw, nb) = (file.arch.len(), file.weights.len(), file.biases.len());
        if n != nw || n != nb {
            return Err(WeightFileError::LayerCount {
                arch: n,
                weights: nw,
                biases: nb,
            });
        }
        let layers = file
            .arch
            .into_iter()
            .zip(file.weights)
            .zip(file.biases)
            .enumerate()
            .map(|(i, ((spec, w), b))| Layer::checked(i, spec.input, spec.output, w, b, spec.activation))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layers)
    }

    pub fn from_json(json: &str) -> Result<Self, WeightFileError> {
        Self::from_weight_file(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WeightFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_weight_file(&self) -> WeightFile {
        WeightFile {
            arch: self
                .layers
                .iter()
                .map(|l| LayerSpec {
                    input: l.input,
                    output: l.output,
                    activation: l.activation,
                })
                .collect(),
            weights: self.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: self.layers.iter().map(|l| l.bias.clone()).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    /// Final-layer outputs before the softmax.
    pub fn logits(&self, input: &[f64]) -> Vec<f64> {
        self.layers
            .iter()
            .fold(input.to_vec(), |a, layer| layer.forward(&a))
    }
}

impl ClassifierOracle for MlpOracle {
    fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError> {
        if image.len() != self.input_dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.input_dim(),
                got: image.len(),
            });
        }
        checked_probs(softmax(&self.logits(image.as_slice())), self.num_classes())
    }
}
