//! Classifier oracles: the only window the attack has onto a model.
//!
//! Images are flattened row-major as (row, col, channel) everywhere in this
//! module, matching the weight-file and wire formats.

mod linear;
mod mlp;
mod remote;

pub use linear::LinearSoftmaxOracle;
pub use mlp::{Activation, Layer, LayerSpec, MlpOracle, WeightFile, WeightFileError};
pub use remote::{decode_request, encode_request, ProbabilityRequest, ProbabilityResponse, RemoteOracle};

use thiserror::Error;

use crate::image::Image;
use crate::objective::{ProbError, ProbVector};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle expects {expected} input values, image has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("oracle returned {got} probabilities, expected {expected}")]
    ClassCount { expected: usize, got: usize },
    #[error("invalid probabilities: {0}")]
    Probabilities(#[from] ProbError),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("server answered HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Query-only access to a classifier's per-class probabilities.
pub trait ClassifierOracle {
    fn num_classes(&self) -> usize;

    /// One query. Implementations validate and renormalize their output.
    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError>;

    /// Label the oracle assigns to `image` (costs one query).
    fn predict(&self, image: &Image) -> Result<usize, OracleError> {
        Ok(self.probabilities(image)?.argmax())
    }
}

impl<T: ClassifierOracle + ?Sized> ClassifierOracle for &T {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError> {
        (**self).probabilities(image)
    }
}

impl<T: ClassifierOracle + ?Sized> ClassifierOracle for Box<T> {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn probabilities(&self, image: &Image) -> Result<ProbVector, OracleError> {
        (**self).probabilities(image)
    }
}

/// Returns the same vector for every input.
#[derive(Clone, Debug)]
pub struct ConstantOracle {
    probs: ProbVector,
}

impl ConstantOracle {
    pub fn new(probs: ProbVector) -> Self {
        Self { probs }
    }

    pub fn uniform(num_classes: usize) -> Self {
        Self::new(ProbVector::uniform(num_classes))
    }
}

impl ClassifierOracle for ConstantOracle {
    fn num_classes(&self) -> usize {
        self.probs.num_classes()
    }

    fn probabilities(&self, _image: &Image) -> Result<ProbVector, OracleError> {
        Ok(self.probs.clone())
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn checked_probs(raw: Vec<f64>, expected: usize) -> Result<ProbVector, OracleError> {
    if raw.len() != expected {
        return Err(OracleError::ClassCount {
            expected,
            got: raw.len(),
        });
    }
    Ok(ProbVector::new(raw)?)
}
