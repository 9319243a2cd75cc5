//! Black-box adversarial attacks that evolve a handful of transparent shapes.
//!
//! A single genome of `N` circles, triangles or rectangles is composited onto
//! the attacked image, the result is clipped into an L∞ ball around the
//! original, and a (1+1) evolution strategy maximizes a targeted
//! log-probability margin using nothing but the classifier's output scores.
//!
//! Modules:
//! - [`image`], [`genome`], [`config`], [`rng`], [`query`], [`record`]: shared domain types
//! - [`render`]: rasterization, alpha compositing and L∞ projection
//! - [`evolution`]: mutation operator, mutation-rate schedule and the attack loop
//! - [`objective`]: losses and success predicates
//! - [`models`]: classifier oracles (linear-softmax, MLP, remote HTTP)
//! - [`harness`]: datasets, experiment sweeps, reports, PNG export, reconstruction

pub mod config;
pub mod evolution;
pub mod genome;
pub mod harness;
pub mod image;
pub mod models;
pub mod objective;
pub mod query;
pub mod record;
pub mod render;
pub mod rng;

pub use config::{AttackConfig, ConfigError};
pub use evolution::{attack, mutate, AttackError, MutationState};
pub use genome::{Genome, GenomeError, ShapeKind};
pub use image::{Image, ImageError};
pub use models::{ClassifierOracle, LinearSoftmaxOracle, MlpOracle, OracleError, RemoteOracle};
pub use objective::{LossFunction, ProbError, ProbVector};
pub use query::{BudgetExhausted, QueryCounter};
pub use record::{AttackRecord, BlendMode};
pub use render::{project_linf, render, RenderError};
pub use rng::RandomStream;
