//! Attack hyper-parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::ShapeKind;

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 12.0;
pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_N_P: u32 = 10;
pub const DEFAULT_BUDGET: usize = 10_000;
pub const DEFAULT_P_MIN: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("num_shapes must be at least 1")]
    NumShapes,
    #[error("beta must be positive, got {0}")]
    Beta(f64),
    #[error("n_p must be at least 1")]
    MutationDenominator,
    #[error("b must be finite and non-negative, got {0}")]
    MutationSlope(f64),
    #[error("budget must be at least 1 query")]
    Budget,
    #[error("p_min must lie in (0, 1), got {0}")]
    ProbabilityFloor(f64),
    #[error("target class {target} is out of range for {num_classes} classes")]
    TargetClass { target: usize, num_classes: usize },
}

/// All knobs of one attack run.
///
/// Defaults: ε = 0.05, β = 12, b = 0.75, n_p = 10, budget = 10 000 queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// L∞ radius of the perturbation.
    pub epsilon: f64,
    pub num_shapes: usize,
    pub kind: ShapeKind,
    /// Circle radius divider: the largest radius is `(h + w) / beta`.
    pub beta: f64,
    /// Slope of the mutation-rate schedule `mu = b * pl / n_p`.
    pub b: f64,
    pub n_p: u32,
    /// Maximum number of oracle queries, including the initial evaluation.
    pub budget: usize,
    pub target_class: usize,
    pub seed: u64,
    /// Probability floor applied before taking logs in the loss.
    pub p_min: f64,
    /// Skip the oracle call for children identical to their parent.
    pub skip_noop_children: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            num_shapes: 100,
            kind: ShapeKind::Circle,
            beta: DEFAULT_BETA,
            b: DEFAULT_B,
            n_p: DEFAULT_N_P,
            budget: DEFAULT_BUDGET,
            target_class: 0,
            seed: 0,
            p_min: DEFAULT_P_MIN,
            skip_noop_children: false,
        }
    }
}

impl AttackConfig {
    pub fn new(kind: ShapeKind, num_shapes: usize, target_class: usize) -> Self {
        Self {
            kind,
            num_shapes,
            target_class,
            ..Self::default()
        }
    }

    /// Checks everything that does not depend on the oracle.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.num_shapes == 0 {
            return Err(ConfigError::NumShapes);
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(ConfigError::Beta(self.beta));
        }
        if self.n_p == 0 {
            return Err(ConfigError::MutationDenominator);
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(ConfigError::MutationSlope(self.b));
        }
        if self.budget == 0 {
            return Err(ConfigError::Budget);
        }
        if !(self.p_min > 0.0 && self.p_min < 1.0) {
            return Err(ConfigError::ProbabilityFloor(self.p_min));
        }
        Ok(())
    }

    /// Full validation once the oracle's class count is known.
    pub fn validate_for(&self, num_classes: usize) -> Result<(), ConfigError> {
        self.validate()?;
        if self.target_class >= num_classes {
            return Err(ConfigError::TargetClass {
                target: self.target_class,
                num_classes,
            });
        }
        Ok(())
    }
}
