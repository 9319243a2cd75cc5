//! Losses and success predicates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::DEFAULT_P_MIN;
use crate::image::{Image, ImageError};

/// Allowed deviation of a raw probability vector's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum ProbError {
    #[error("probability vector is empty")]
    Empty,
    #[error("probability {value} at class {index} is negative or not finite")]
    InvalidEntry { index: usize, value: f64 },
    #[error("probabilities sum to {0}, outside 1 ± 1e-3")]
    Sum(f64),
}

/// Per-class probabilities: entries in `[0, 1]` summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = ProbError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl ProbVector {
    /// Validates and renormalizes a raw score vector.
    ///
    /// Entries must be finite and non-negative and their sum within
    /// [`SUM_TOLERANCE`] of 1; the result is divided by that sum.
    pub fn new(mut probs: Vec<f64>) -> Result<Self, ProbError> {
        if probs.is_empty() {
            return Err(ProbError::Empty);
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(ProbError::InvalidEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ProbError::Sum(sum));
        }
        for p in &mut probs {
            *p = (*p / sum).min(1.0);
        }
        Ok(Self(probs))
    }

    /// `K` equal probabilities.
    pub fn uniform(num_classes: usize) -> Self {
        assert!(num_classes > 0);
        Self(vec![1.0 / num_classes as f64; num_classes])
    }

    /// All mass on `class`.
    pub fn one_hot(num_classes: usize, class: usize) -> Self {
        assert!(class < num_classes);
        let mut v = vec![0.0; num_classes];
        v[class] = 1.0;
        Self(v)
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// `ln f_c - ln(sum of the other classes)`, each term floored at `p_min`.
pub fn targeted_loss(probs: &ProbVector, target: usize, p_min: f64) -> f64 {
    let p = probs.as_slice();
    let own = p[target];
    let others: f64 = p
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, v)| v)
        .sum();
    own.max(p_min).ln() - others.max(p_min).ln()
}

pub fn is_success_targeted(probs: &ProbVector, target: usize) -> bool {
    probs.argmax() == target
}

pub fn is_success_untargeted(probs: &ProbVector, true_label: usize) -> bool {
    probs.argmax() != true_label
}

/// Negative mean squared error: 0 for a perfect match, lower is worse.
pub fn reconstruction_loss(rendered: &Image, reference: &Image) -> Result<f64, ImageError> {
    Ok(-rendered.mse(reference)?)
}

/// The quantity an evolution run maximizes.
#[derive(Clone, Debug, PartialEq)]
pub enum LossFunction {
    /// Log-margin of the target class against all others.
    TargetedLogMargin { target_class: usize, p_min: f64 },
    /// Negative MSE against a reference image.
    ReconstructionNegMse { reference: Image },
}

impl LossFunction {
    pub fn targeted(target_class: usize) -> Self {
        LossFunction::TargetedLogMargin {
            target_class,
            p_min: DEFAULT_P_MIN,
        }
    }

    pub fn reconstruction(reference: Image) -> Self {
        LossFunction::ReconstructionNegMse { reference }
    }

    /// Loss of an oracle response. `None` for reconstruction losses.
    pub fn of_probs(&self, probs: &ProbVector) -> Option<f64> {
        match self {
            LossFunction::TargetedLogMargin {
                target_class,
                p_min,
            } => Some(targeted_loss(probs, *target_class, *p_min)),
            LossFunction::ReconstructionNegMse { .. } => None,
        }
    }

    /// Loss of a rendered image. `None` for classifier losses.
    pub fn of_image(&self, rendered: &Image) -> Option<Result<f64, ImageError>> {
        match self {
            LossFunction::ReconstructionNegMse { reference } => {
                Some(reconstruction_loss(rendered, reference))
            }
            LossFunction::TargetedLogMargin { .. } => None,
        }
    }
}
