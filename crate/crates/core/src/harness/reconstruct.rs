//! Image reconstruction with the same evolution loop: shapes are painted on
//! a black canvas (no ε-ball) and fitness is negative MSE to the reference.

use crate::config::{DEFAULT_B, DEFAULT_BETA, DEFAULT_N_P};
use crate::evolution::{evolve, EvolutionSettings};
use crate::genome::{Genome, ShapeKind};
use crate::image::Image;
use crate::objective::reconstruction_loss;
use crate::render::{render_unprojected, RenderError};
use crate::rng::RandomStream;

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub image: Image,
    pub genome: Genome,
    /// Best fitness (negative MSE) after each evaluation; non-decreasing.
    pub trajectory: Vec<f64>,
    pub initial_mse: f64,
    pub final_mse: f64,
}

/// Evolves `num_shapes` shapes of `kind` for `iterations` evaluations.
pub fn reconstruct(
    reference: &Image,
    kind: ShapeKind,
    num_shapes: usize,
    iterations: usize,
    seed: u64,
) -> Result<ReconstructionResult, RenderError> {
    let mut rng = RandomStream::new(seed);
    let initial = Genome::random(kind, num_shapes, &mut rng);
    run(reference, initial, iterations, &mut rng, DEFAULT_BETA)
}

/// As [`reconstruct`], starting from a given genome.
pub fn reconstruct_from(
    reference: &Image,
    initial: Genome,
    iterations: usize,
    seed: u64,
    beta: f64,
) -> Result<ReconstructionResult, RenderError> {
    run(reference, initial, iterations, &mut RandomStream::new(seed), beta)
}

fn run(
    reference: &Image,
    initial: Genome,
    iterations: usize,
    rng: &mut RandomStream,
    beta: f64,
) -> Result<ReconstructionResult, RenderError> {
    assert!(iterations >= 1, "iterations must be at least 1");
    let (h, w) = reference.dims();
    let canvas = Image::zeros(h, w);
    let settings = EvolutionSettings {
        budget: iterations,
        b: DEFAULT_B,
        n_p: DEFAULT_N_P,
        skip_noop_children: false,
    };
    let fitness = |g: &Genome| -> Result<(f64, ()), RenderError> {
        let img = render_unprojected(g, &canvas, beta)?;
        Ok((reconstruction_loss(&img, reference)?, ()))
    };
    let outcome = evolve(initial, &settings, rng, fitness, |_| false).map_err(|i| i.error)?;
    let image = render_unprojected(&outcome.best, &canvas, beta)?;
    let trajectory: Vec<f64> = outcome
        .trajectory
        .iter()
        .scan(f64::NEG_INFINITY, |best, &l| {
            *best = best.max(l);
            Some(*best)
        })
        .collect();
    Ok(ReconstructionResult {
        initial_mse: -outcome.trajectory[0],
        final_mse: -outcome.best_loss,
        image,
        genome: outcome.best,
        trajectory,
    })
}
