//! Runs an experiment plan and aggregates success rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{ExperimentPlan, PlannedAttack};
use crate::config::AttackConfig;
use crate::evolution::attack;
use crate::genome::ShapeKind;
use crate::models::ClassifierOracle;
use crate::record::AttackRecord;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one attack: SplitMix64 folded over
/// `(master, image_index, target, config_index)`.
///
/// `s = mix(master); s = mix(s ^ image); s = mix(s ^ target); s = mix(s ^ config)`.
/// Independent of execution order.
pub fn attack_seed(master: u64, image_index: usize, target: usize, config_index: usize) -> u64 {
    [image_index, target, config_index]
        .iter()
        .fold(splitmix64(master), |s, &v| splitmix64(s ^ v as u64))
}

/// One planned attack and how it went.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEntry {
    pub image_index: usize,
    pub config_index: usize,
    pub true_label: usize,
    pub target_class: usize,
    pub seed: u64,
    pub queries_used: usize,
    /// `None` when the attack failed with an error.
    pub record: Option<AttackRecord>,
    pub error: Option<String>,
}

impl ExperimentEntry {
    pub fn success_targeted(&self) -> bool {
        self.record.as_ref().is_some_and(AttackRecord::success_targeted)
    }

    pub fn success_untargeted(&self) -> bool {
        self.record.as_ref().is_some_and(AttackRecord::success_untargeted)
    }
}

/// Aggregates for one configuration. Errored attacks count as failed runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub kind: ShapeKind,
    pub num_shapes: usize,
    pub targeted_asr: f64,
    pub untargeted_asr: f64,
    /// Mean queries over targeted successes; `None` without any success.
    pub mean_queries: Option<f64>,
    pub runs: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub configs: Vec<ConfigSummary>,
    /// Ordered by config, then by plan order.
    pub entries: Vec<ExperimentEntry>,
}

impl ExperimentSummary {
    pub fn from_entries(configs: &[AttackConfig], entries: Vec<ExperimentEntry>) -> Self {
        let configs = configs
            .iter()
            .enumerate()
            .map(|(ci, cfg)| {
                let mine: Vec<&ExperimentEntry> = entries.iter().filter(|e| e.config_index == ci).collect();
                let runs = mine.len();
                let frac = |n: usize| if runs == 0 { 0.0 } else { n as f64 / runs as f64 };
                let hits: Vec<usize> = mine
                    .iter()
                    .filter(|e| e.success_targeted())
                    .map(|e| e.queries_used)
                    .collect();
                ConfigSummary {
                    kind: cfg.kind,
                    num_shapes: cfg.num_shapes,
                    targeted_asr: frac(hits.len()),
                    untargeted_asr: frac(mine.iter().filter(|e| e.success_untargeted()).count()),
                    mean_queries: (!hits.is_empty())
                        .then(|| hits.iter().sum::<usize>() as f64 / hits.len() as f64),
                    runs,
                    errors: mine.iter().filter(|e| e.error.is_some()).count(),
                }
            })
            .collect();
        Self { configs, entries }
    }
}

/// Runs every (attack, config) pair of `plan`, in parallel.
///
/// Per-attack seeds come from [`attack_seed`], so the result does not depend
/// on scheduling. Oracle failures are recorded on the entry and do not stop
/// the sweep.
pub fn run_experiment<O: ClassifierOracle + Sync + ?Sized>(
    plan: &ExperimentPlan,
    oracle: &O,
    master_seed: u64,
) -> ExperimentSummary {
    let jobs: Vec<(usize, &AttackConfig, &PlannedAttack)> = plan
        .configs()
        .iter()
        .enumerate()
        .flat_map(|(ci, cfg)| plan.attacks().iter().map(move |a| (ci, cfg, a)))
        .collect();

    let entries = jobs
        .into_par_iter()
        .map(|(ci, template, planned)| {
            let seed = attack_seed(master_seed, planned.image_index, planned.target, ci);
            let config = AttackConfig {
                target_class: planned.target,
                seed,
                ..template.clone()
            };
            let image = plan
                .image(planned.image_index)
                .expect("plan holds every attacked image");
            let (record, error, queries_used) = match attack(oracle, image, planned.true_label, &config) {
                Ok(rec) => {
                    let q = rec.queries_used();
                    (Some(rec), None, q)
                }
                Err(e) => {
                    let q = e.queries_used().unwrap_or(0);
                    (None, Some(e.to_string()), q)
                }
            };
            ExperimentEntry {
                image_index: planned.image_index,
                config_index: ci,
                true_label: planned.true_label,
                target_class: planned.target,
                seed,
                queries_used,
                record,
                error,
            }
        })
        .collect();

    ExperimentSummary::from_entries(plan.configs(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = attack_seed(1, 0, 1, 0);
        assert_eq!(a, attack_seed(1, 0, 1, 0));
        assert_ne!(a, attack_seed(1, 1, 0, 0));
        assert_ne!(a, attack_seed(1, 0, 1, 1));
        assert_ne!(a, attack_seed(2, 0, 1, 0));
    }
}
