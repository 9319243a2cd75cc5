//! Mutation operator, mutation-rate schedule and the (1+1) attack loop.

use thiserror::Error;

use crate::config::{AttackConfig, ConfigError};
use crate::genome::Genome;
use crate::image::Image;
use crate::models::{ClassifierOracle, OracleError};
use crate::objective::{is_success_targeted, targeted_loss, ProbVector};
use crate::query::QueryCounter;
use crate::record::{AttackRecord, RecordError};
use crate::render::{render, RenderError};
use crate::rng::RandomStream;

/// Adaptive mutation rate `mu = min(1, b * pl / n_p)`, where `pl` counts
/// consecutive non-improving iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationState {
    pub pl: u64,
    pub b: f64,
    pub n_p: u32,
}

impl MutationState {
    pub fn new(b: f64, n_p: u32) -> Self {
        assert!(n_p >= 1, "n_p must be at least 1");
        Self { pl: 0, b, n_p }
    }

    pub fn from_config(config: &AttackConfig) -> Self {
        Self::new(config.b, config.n_p)
    }

    pub fn mu(&self) -> f64 {
        current_mu(self)
    }

    /// Resets `pl` on improvement, increments it otherwise.
    pub fn record(&mut self, improved: bool) {
        if improved {
            self.pl = 0;
        } else {
            self.pl += 1;
        }
    }
}

pub fn current_mu(state: &MutationState) -> f64 {
    (state.b * state.pl as f64 / state.n_p as f64).clamp(0.0, 1.0)
}

/// Rows `start..=end` rotated by `shift` (-1: towards lower indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Roll {
    pub start: usize,
    pub end: usize,
    pub shift: i8,
}

/// What one call to [`mutate_traced`] did.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationTrace {
    /// Row whose entries were changed.
    pub row: usize,
    pub roll: Option<Roll>,
    /// Columns changed, in draw order.
    pub columns: Vec<usize>,
    /// True when the columns were resampled, false when perturbed additively.
    pub reset: bool,
    /// Fresh values (reset) or additive offsets, one per column, before clipping.
    pub draws: Vec<f64>,
}

/// Produces a mutated child; the parent is untouched.
pub fn mutate(parent: &Genome, mu: f64, rng: &mut RandomStream) -> Genome {
    mutate_traced(parent, mu, rng).0
}

/// [`mutate`] plus a record of the random decisions taken.
///
/// Draw order: row `c` in `[0, N-1]`, `change` in `[0, a+1]`; if
/// `change == a+1` then `change = a` and the rows between `c` and a fresh
/// `j` are rotated by one; then `change` distinct columns, one uniform draw
/// against `mu`, and one value per column.
pub fn mutate_traced(parent: &Genome, mu: f64, rng: &mut RandomStream) -> (Genome, MutationTrace) {
    let n = parent.num_shapes();
    let a = parent.arity();
    let mut child = parent.clone();

    let c = rng.uniform_int(0, n - 1);
    let mut change = rng.uniform_int(0, a + 1);
    let mut roll = None;
    if change > a {
        change -= 1;
        let j = rng.uniform_int(0, n - 1);
        let r = if c < j {
            Roll { start: c, end: j, shift: -1 }
        } else {
            Roll { start: j, end: c, shift: 1 }
        };
        let block = &mut child.data_mut()[r.start * a..(r.end + 1) * a];
        if r.shift < 0 {
            block.rotate_left(a);
        } else {
            block.rotate_right(a);
        }
        roll = Some(r);
    }

    let columns = rng.choose_without_replacement(a, change);
    let reset = rng.unit() < mu;
    let mut draws = Vec::with_capacity(columns.len());
    let data = child.data_mut();
    for &col in &columns {
        let slot = &mut data[c * a + col];
        if reset {
            let v = rng.unit();
            draws.push(v);
            *slot = v;
        } else {
            let d = rng.uniform(-0.5, 0.5);
            draws.push(d);
            *slot += d;
        }
    }
    child.clip();

    (
        child,
        MutationTrace {
            row: c,
            roll,
            columns,
            reset,
            draws,
        },
    )
}

/// Loop parameters shared by attacks and reconstructions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSettings {
    /// Maximum number of evaluations, including the initial one.
    pub budget: usize,
    pub b: f64,
    pub n_p: u32,
    pub skip_noop_children: bool,
}

impl EvolutionSettings {
    pub fn from_config(config: &AttackConfig) -> Self {
        Self {
            budget: config.budget,
            b: config.b,
            n_p: config.n_p,
            skip_noop_children: config.skip_noop_children,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionOutcome<T> {
    pub best: Genome,
    pub best_loss: f64,
    /// Whatever the evaluator returned alongside the best loss.
    pub best_aux: T,
    /// Loss of every evaluation in order; its length is the number of evaluations.
    pub trajectory: Vec<f64>,
    /// `pl` after each mutation step.
    pub pl_trace: Vec<u64>,
    /// True when the stop predicate fired before the budget ran out.
    pub stopped_early: bool,
}

impl<T> EvolutionOutcome<T> {
    pub fn evaluations(&self) -> usize {
        self.trajectory.len()
    }
}

/// An evaluation failed; carries how far the run got.
#[derive(Debug)]
pub struct Interrupted<E> {
    pub error: E,
    /// Evaluations charged, including the failed one.
    pub evaluations: usize,
    pub trajectory: Vec<f64>,
}

/// Elitist (1+1) evolution: mutate the current solution, keep the child only
/// if its loss is strictly greater.
///
/// `evaluate` is called once per charged evaluation. `is_done` is checked on
/// the cached result of the current accepted solution and costs nothing.
pub fn evolve<T, E>(
    initial: Genome,
    settings: &EvolutionSettings,
    rng: &mut RandomStream,
    mut evaluate: impl FnMut(&Genome) -> Result<(f64, T), E>,
    mut is_done: impl FnMut(&T) -> bool,
) -> Result<EvolutionOutcome<T>, Interrupted<E>> {
    assert!(settings.budget >= 1, "budget must be at least 1");
    let mut counter = QueryCounter::new(settings.budget);
    let mut state = MutationState::new(settings.b, settings.n_p);
    let mut trajectory = Vec::new();
    let mut pl_trace = Vec::new();

    let mut charged_eval = |g: &Genome, counter: &mut QueryCounter, trajectory: &mut Vec<f64>| {
        counter.charge().expect("loop never exceeds the budget");
        match evaluate(g) {
            Ok((loss, aux)) => {
                trajectory.push(loss);
                Ok((loss, aux))
            }
            Err(error) => Err(error),
        }
    };

    let (mut best_loss, mut best_aux) = match charged_eval(&initial, &mut counter, &mut trajectory) {
        Ok(v) => v,
        Err(error) => {
            return Err(Interrupted {
                error,
                evaluations: counter.used(),
                trajectory,
            })
        }
    };
    let mut best = initial;
    let mut stopped_early = is_done(&best_aux);

    while !stopped_early && !counter.is_exhausted() {
        let child = mutate(&best, state.mu(), rng);
        if settings.skip_noop_children && child == best {
            state.record(false);
            pl_trace.push(state.pl);
            continue;
        }
        let (loss, aux) = match charged_eval(&child, &mut counter, &mut trajectory) {
            Ok(v) => v,
            Err(error) => {
                return Err(Interrupted {
                    error,
                    evaluations: counter.used(),
                    trajectory,
                })
            }
        };
        let improved = loss > best_loss;
        if improved {
            best = child;
            best_loss = loss;
            best_aux = aux;
        }
        state.record(improved);
        pl_trace.push(state.pl);
        stopped_early = is_done(&best_aux);
    }

    Ok(EvolutionOutcome {
        best,
        best_loss,
        best_aux,
        trajectory,
        pl_trace,
        stopped_early,
    })
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("true label {label} is out of range for {num_classes} classes")]
    TrueLabel { label: usize, num_classes: usize },
    #[error("target class {0} equals the true label")]
    TargetIsTrueLabel(usize),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("oracle failed after {queries_used} queries: {source}")]
    Oracle {
        #[source]
        source: OracleError,
        queries_used: usize,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
}

impl AttackError {
    /// Queries spent before the failure, when an oracle call failed.
    pub fn queries_used(&self) -> Option<usize> {
        match self {
            AttackError::Oracle { queries_used, .. } => Some(*queries_used),
            _ => None,
        }
    }
}

enum EvalError {
    Render(RenderError),
    Oracle(OracleError),
}

/// Runs one targeted attack on `x`, whose correct label is `true_label`.
///
/// Every oracle call counts against `config.budget`, the initial evaluation
/// included. The run stops as soon as the accepted solution is classified as
/// the target class; running out of budget is reported as failure in the
/// record, not as an error.
pub fn attack<O: ClassifierOracle + ?Sized>(
    oracle: &O,
    x: &Image,
    true_label: usize,
    config: &AttackConfig,
) -> Result<AttackRecord, AttackError> {
    let num_classes = oracle.num_classes();
    config.validate_for(num_classes)?;
    if true_label >= num_classes {
        return Err(AttackError::TrueLabel {
            label: true_label,
            num_classes,
        });
    }
    if true_label == config.target_class {
        return Err(AttackError::TargetIsTrueLabel(true_label));
    }

    let mut rng = RandomStream::new(config.seed);
    let initial = Genome::random(config.kind, config.num_shapes, &mut rng);
    let target = config.target_class;
    let evaluate = |g: &Genome| -> Result<(f64, ProbVector), EvalError> {
        let adv = render(g, x, config.epsilon, config.beta).map_err(EvalError::Render)?;
        let probs = oracle.probabilities(&adv).map_err(EvalError::Oracle)?;
        if probs.num_classes() != num_classes {
            return Err(EvalError::Oracle(OracleError::ClassCount {
                expected: num_classes,
                got: probs.num_classes(),
            }));
        }
        Ok((targeted_loss(&probs, target, config.p_min), probs))
    };
    let settings = EvolutionSettings::from_config(config);
    let outcome = evolve(initial, &settings, &mut rng, evaluate, |p| {
        is_success_targeted(p, target)
    })
    .map_err(|int| match int.error {
        EvalError::Render(e) => AttackError::Render(e),
        EvalError::Oracle(source) => AttackError::Oracle {
            source,
            queries_used: int.evaluations,
        },
    })?;

    let final_image = render(&outcome.best, x, config.epsilon, config.beta)?;
    let max_deviation = final_image.linf_distance(x).map_err(RenderError::from)?;
    Ok(AttackRecord::new(
        true_label,
        outcome.trajectory,
        outcome.best,
        final_image,
        outcome.best_aux,
        max_deviation,
        config.clone(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::ShapeKind;

    #[test]
    fn mu_schedule() {
        let mut s = MutationState::new(0.75, 10);
        assert_eq!(s.mu(), 0.0);
        s.pl = 10;
        assert_eq!(s.mu(), 0.75);
        s.pl = 20;
        assert_eq!(s.mu(), 1.0);
        s.record(true);
        assert_eq!(s.pl, 0);
        s.record(false);
        s.record(false);
        assert_eq!(s.pl, 2);
    }

    #[test]
    fn zero_change_without_roll_copies_parent() {
        let mut rng = RandomStream::new(0);
        let parent = Genome::random(ShapeKind::Circle, 4, &mut rng);
        let mut seen = 0;
        for seed in 0..500 {
            let mut r = RandomStream::new(seed);
            let (child, trace) = mutate_traced(&parent, 0.3, &mut r);
            if trace.columns.is_empty() && trace.roll.is_none() {
                assert_eq!(child, parent);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn additive_branch_clips_at_bounds() {
        // search seeds for an additive mutation that crosses each bound
        let parent = Genome::new(ShapeKind::Circle, 1, vec![0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9]).unwrap();
        let (mut hi, mut lo) = (false, false);
        for seed in 0..2000 {
            let mut r = RandomStream::new(seed);
            let (child, trace) = mutate_traced(&parent, 0.0, &mut r);
            assert!(!trace.reset);
            for (&col, &d) in trace.columns.iter().zip(&trace.draws) {
                let before = parent.row(0)[col] + d;
                if before > 1.0 {
                    assert_eq!(child.row(0)[col], 1.0);
                    hi = true;
                }
                if before < 0.0 {
                    assert_eq!(child.row(0)[col], 0.0);
                    lo = true;
                }
            }
        }
        assert!(hi && lo);
    }

    #[test]
    fn roll_rotates_rows_between_c_and_j() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 10.0; 7]).collect();
        let parent = Genome::from_rows(ShapeKind::Circle, &rows).unwrap();
        let mut checked = 0;
        for seed in 0..3000 {
            let mut r = RandomStream::new(seed);
            let (child, trace) = mutate_traced(&parent, 0.0, &mut r);
            let Some(roll) = trace.roll else { continue };
            assert_eq!(trace.columns.len(), 7);
            let mut expected: Vec<usize> = (0..5).collect();
            if roll.shift < 0 {
                expected[roll.start..=roll.end].rotate_left(1);
            } else {
                expected[roll.start..=roll.end].rotate_right(1);
            }
            for (i, &src) in expected.iter().enumerate() {
                if i != trace.row {
                    assert_eq!(child.row(i), parent.row(src));
                }
            }
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn seeded_mutation_replays() {
        let mut r = RandomStream::new(99);
        let parent = Genome::random(ShapeKind::Circle, 3, &mut r);
        let a = mutate(&parent, 0.4, &mut RandomStream::new(5));
        let b = mutate(&parent, 0.4, &mut RandomStream::new(5));
        assert_eq!(a.as_slice(), b.as_slice());
    }

    fn scripted(losses: Vec<f64>) -> impl FnMut(&Genome) -> Result<(f64, ()), ()> {
        let mut it = losses.into_iter();
        move |_| Ok((it.next().expect("script exhausted"), ()))
    }

    #[test]
    fn elitism_and_pl_tracking() {
        let mut rng = RandomStream::new(1);
        let init = Genome::random(ShapeKind::Triangle, 3, &mut rng);
        let settings = EvolutionSettings {
            budget: 8,
            b: 0.75,
            n_p: 10,
            skip_noop_children: false,
        };
        // init, then: better, equal (tie rejects), worse, worse, better, worse, better
        let script = vec![0.0, 1.0, 1.0, 0.5, -3.0, 2.0, 1.9, 2.5];
        let out = evolve(init, &settings, &mut rng, scripted(script.clone()), |_| false).unwrap();
        assert_eq!(out.trajectory, script);
        assert_eq!(out.pl_trace, vec![0, 1, 2, 3, 0, 1, 0]);
        assert_eq!(out.best_loss, 2.5);
        assert!(!out.stopped_early);
        assert_eq!(out.evaluations(), 8);
    }

    #[test]
    fn interrupted_carries_progress() {
        let mut rng = RandomStream::new(1);
        let init = Genome::random(ShapeKind::Circle, 2, &mut rng);
        let settings = EvolutionSettings {
            budget: 10,
            b: 0.75,
            n_p: 10,
            skip_noop_children: false,
        };
        let mut calls = 0;
        let err = evolve(
            init,
            &settings,
            &mut rng,
            |_| {
                calls += 1;
                if calls == 3 {
                    Err("boom")
                } else {
                    Ok((calls as f64, ()))
                }
            },
            |_| false,
        )
        .unwrap_err();
        assert_eq!(err.error, "boom");
        assert_eq!(err.evaluations, 3);
        assert_eq!(err.trajectory, vec![1.0, 2.0]);
    }

    #[test]
    fn skip_noop_children_saves_queries() {
        let mut rng = RandomStream::new(2);
        let init = Genome::random(ShapeKind::Circle, 2, &mut rng);
        let settings = EvolutionSettings {
            budget: 200,
            b: 0.75,
            n_p: 10,
            skip_noop_children: true,
        };
        // constant loss: nothing is accepted, so every evaluated child must differ from init
        let parent = init.clone();
        let mut evaluated = 0;
        let out = evolve(
            init,
            &settings,
            &mut rng,
            |g: &Genome| {
                if evaluated > 0 {
                    assert_ne!(g, &parent, "evaluated an unchanged child");
                }
                evaluated += 1;
                Ok::<_, ()>((0.0, ()))
            },
            |_| false,
        )
        .unwrap();
        assert_eq!(out.evaluations(), 200);
        assert!(out.pl_trace.len() > 199);
    }
}
