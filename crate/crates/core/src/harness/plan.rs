//! Which (image, target, configuration) attacks an experiment runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AttackConfig, ConfigError, DEFAULT_B, DEFAULT_BETA, DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_N_P};
use crate::genome::ShapeKind;
use crate::image::Image;
use crate::models::{ClassifierOracle, OracleError};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("image index {index} is out of range for a dataset of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("label {label} of image {index} is out of range for {num_classes} classes")]
    Label {
        index: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("oracle has {0} classes; at least 2 are needed for a targeted attack")]
    TooFewClasses(usize),
    #[error("plan has no configurations")]
    NoConfigs,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("oracle failed while checking image {index}: {source}")]
    Oracle {
        index: usize,
        #[source]
        source: OracleError,
    },
    #[error("cannot read plan: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid plan JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A dataset image; `label: None` means "whatever the oracle predicts".
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: Option<usize>,
}

impl LabeledImage {
    pub fn labeled(image: Image, label: usize) -> Self {
        Self {
            image,
            label: Some(label),
        }
    }

    pub fn unlabeled(image: Image) -> Self {
        Self { image, label: None }
    }
}

/// Target classes attacked per image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSelection {
    /// Every class except the true label.
    AllOthers,
    /// The first `n` classes after the true label, wrapping: `y+1, y+2, ...`.
    Next(usize),
    /// Fixed classes; any equal to the true label are skipped.
    Explicit(Vec<usize>),
}

impl TargetSelection {
    fn targets(&self, true_label: usize, num_classes: usize) -> Vec<usize> {
        match self {
            TargetSelection::AllOthers => (0..num_classes).filter(|&c| c != true_label).collect(),
            TargetSelection::Next(n) => (1..=(*n).min(num_classes - 1))
                .map(|k| (true_label + k) % num_classes)
                .collect(),
            TargetSelection::Explicit(list) => list
                .iter()
                .copied()
                .filter(|&c| c != true_label && c < num_classes)
                .collect(),
        }
    }
}

/// JSON plan accepted by the `experiment` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub image_indices: Vec<usize>,
    pub shapes: Vec<ShapeKind>,
    pub num_shapes: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_n_p")]
    pub n_p: u32,
    #[serde(default = "default_targets")]
    pub targets: TargetSelection,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_b() -> f64 {
    DEFAULT_B
}
fn default_n_p() -> u32 {
    DEFAULT_N_P
}
fn default_targets() -> TargetSelection {
    TargetSelection::AllOthers
}

impl PlanFile {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, PlanError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// The shape-kind x N sweep, in kind-major order.
    pub fn configs(&self) -> Vec<AttackConfig> {
        self.shapes
            .iter()
            .flat_map(|&kind| {
                self.num_shapes.iter().map(move |&n| AttackConfig {
                    epsilon: self.epsilon,
                    beta: self.beta,
                    budget: self.budget,
                    b: self.b,
                    n_p: self.n_p,
                    ..AttackConfig::new(kind, n, 0)
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedAttack {
    pub image_index: usize,
    pub true_label: usize,
    pub target: usize,
}

/// Validated experiment: correctly classified images, their targets and the
/// configuration sweep. `target_class` and `seed` of each config are filled
/// in per attack.
#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    images: Vec<(usize, Image)>,
    attacks: Vec<PlannedAttack>,
    configs: Vec<AttackConfig>,
    skipped: Vec<usize>,
}

impl ExperimentPlan {
    /// Keeps each requested image only if the oracle predicts its label
    /// (one query per image, outside any attack budget).
    pub fn build<O: ClassifierOracle + ?Sized>(
        dataset: &[LabeledImage],
        indices: &[usize],
        oracle: &O,
        configs: Vec<AttackConfig>,
        targets: &TargetSelection,
    ) -> Result<Self, PlanError> {
        let num_classes = oracle.num_classes();
        if num_classes < 2 {
            return Err(PlanError::TooFewClasses(num_classes));
        }
        if configs.is_empty() {
            return Err(PlanError::NoConfigs);
        }
        for c in &configs {
            c.validate()?;
        }
        let mut images = Vec::new();
        let mut attacks = Vec::new();
        let mut skipped = Vec::new();
        for &index in indices {
            let item = dataset.get(index).ok_or(PlanError::IndexOutOfRange {
                index,
                len: dataset.len(),
            })?;
            if let Some(label) = item.label.filter(|&l| l >= num_classes) {
                return Err(PlanError::Label {
                    index,
                    label,
                    num_classes,
                });
            }
            let predicted = oracle
                .predict(&item.image)
                .map_err(|source| PlanError::Oracle { index, source })?;
            let true_label = item.label.unwrap_or(predicted);
            if predicted != true_label {
                skipped.push(index);
                continue;
            }
            images.push((index, item.image.clone()));
            attacks.extend(
                targets
                    .targets(true_label, num_classes)
                    .into_iter()
                    .map(|target| PlannedAttack {
                        image_index: index,
                        true_label,
                        target,
                    }),
            );
        }
        Ok(Self {
            images,
            attacks,
            configs,
            skipped,
        })
    }

    pub fn attacks(&self) -> &[PlannedAttack] {
        &self.attacks
    }

    pub fn configs(&self) -> &[AttackConfig] {
        &self.configs
    }

    /// Requested indices dropped because the oracle misclassifies them.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    pub fn image(&self, index: usize) -> Option<&Image> {
        self.images.iter().find(|(i, _)| *i == index).map(|(_, img)| img)
    }

    pub fn num_images(&self) -> usize {
        self.images.len()
    }
}
