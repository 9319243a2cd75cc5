//! Per-attack outcome records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AttackConfig;
use crate::genome::Genome;
use crate::image::Image;
use crate::objective::{is_success_targeted, is_success_untargeted, ProbVector};
use crate::rng::RandomStream;

/// How shapes are combined with the image underneath.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    /// `out = (1 - alpha) * under + alpha * colour`
    #[default]
    AlphaOver,
}

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("loss trajectory has {trajectory} entries but {queries} queries were used")]
    TrajectoryLength { trajectory: usize, queries: usize },
    #[error("queries used ({used}) exceed the budget ({budget})")]
    OverBudget { used: usize, budget: usize },
    #[error("targeted success without untargeted success")]
    InconsistentSuccess,
    #[error("stored success flags disagree with the final probabilities")]
    FlagsMismatch,
}

/// Outcome of one attack run.
///
/// Success flags are derived from the final cached probabilities, so a record
/// claiming targeted but not untargeted success cannot be built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct AttackRecord {
    true_label: usize,
    loss_trajectory: Vec<f64>,
    final_genome: Genome,
    final_image: Image,
    final_probs: ProbVector,
    max_deviation: f64,
    config: AttackConfig,
    blend: BlendMode,
}

/// Serialized form. Carries derived fields so the JSON is self-describing.
#[derive(Serialize, Deserialize)]
struct RawRecord {
    success_targeted: bool,
    success_untargeted: bool,
    queries_used: usize,
    true_label: usize,
    target_class: usize,
    seed: u64,
    rng: String,
    blend: BlendMode,
    max_deviation: f64,
    final_probs: ProbVector,
    loss_trajectory: Vec<f64>,
    config: AttackConfig,
    final_genome: Genome,
    final_image: Image,
}

impl TryFrom<RawRecord> for AttackRecord {
    type Error = RecordError;

    fn try_from(raw: RawRecord) -> Result<Self, Self::Error> {
        if raw.success_targeted && !raw.success_untargeted {
            return Err(RecordError::InconsistentSuccess);
        }
        if raw.loss_trajectory.len() != raw.queries_used {
            return Err(RecordError::TrajectoryLength {
                trajectory: raw.loss_trajectory.len(),
                queries: raw.queries_used,
            });
        }
        let rec = AttackRecord::new(
            raw.true_label,
            raw.loss_trajectory,
            raw.final_genome,
            raw.final_image,
            raw.final_probs,
            raw.max_deviation,
            raw.config,
        )?;
        if rec.success_targeted() != raw.success_targeted
            || rec.success_untargeted() != raw.success_untargeted
        {
            return Err(RecordError::FlagsMismatch);
        }
        Ok(AttackRecord {
            blend: raw.blend,
            ..rec
        })
    }
}

impl From<AttackRecord> for RawRecord {
    fn from(r: AttackRecord) -> Self {
        RawRecord {
            success_targeted: r.success_targeted(),
            success_untargeted: r.success_untargeted(),
            queries_used: r.queries_used(),
            true_label: r.true_label,
            target_class: r.config.target_class,
            seed: r.config.seed,
            rng: RandomStream::ALGORITHM.to_string(),
            blend: r.blend,
            max_deviation: r.max_deviation,
            final_probs: r.final_probs,
            loss_trajectory: r.loss_trajectory,
            config: r.config,
            final_genome: r.final_genome,
            final_image: r.final_image,
        }
    }
}

impl AttackRecord {
    pub fn new(
        true_label: usize,
        loss_trajectory: Vec<f64>,
        final_genome: Genome,
        final_image: Image,
        final_probs: ProbVector,
        max_deviation: f64,
        config: AttackConfig,
    ) -> Result<Self, RecordError> {
        if loss_trajectory.len() > config.budget {
            return Err(RecordError::OverBudget {
                used: loss_trajectory.len(),
                budget: config.budget,
            });
        }
        let rec = Self {
            true_label,
            loss_trajectory,
            final_genome,
            final_image,
            final_probs,
            max_deviation,
            config,
            blend: BlendMode::AlphaOver,
        };
        if rec.success_targeted() && !rec.success_untargeted() {
            return Err(RecordError::InconsistentSuccess);
        }
        Ok(rec)
    }

    pub fn success_targeted(&self) -> bool {
        is_success_targeted(&self.final_probs, self.config.target_class)
    }

    pub fn success_untargeted(&self) -> bool {
        is_success_untargeted(&self.final_probs, self.true_label)
    }

    /// Equal to the trajectory length: one loss per oracle evaluation.
    pub fn queries_used(&self) -> usize {
        self.loss_trajectory.len()
    }

    /// Loss of every evaluated candidate, in query order.
    pub fn loss_trajectory(&self) -> &[f64] {
        &self.loss_trajectory
    }

    /// Loss of the accepted solution after each query (running maximum).
    pub fn accepted_losses(&self) -> Vec<f64> {
        self.loss_trajectory
            .iter()
            .scan(f64::NEG_INFINITY, |best, &l| {
                *best = best.max(l);
                Some(*best)
            })
            .collect()
    }

    pub fn final_genome(&self) -> &Genome {
        &self.final_genome
    }

    pub fn final_image(&self) -> &Image {
        &self.final_image
    }

    pub fn final_probs(&self) -> &ProbVector {
        &self.final_probs
    }

    /// `max |x_adv - x|` over all channels, measured on the float image.
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }

    pub fn true_label(&self) -> usize {
        self.true_label
    }

    pub fn target_class(&self) -> usize {
        self.config.target_class
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn config(&self) -> &AttackConfig {
        &self.config
    }

    pub fn blend(&self) -> BlendMode {
        self.blend
    }
}
