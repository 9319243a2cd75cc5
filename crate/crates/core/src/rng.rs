//! Seeded random stream used by every stochastic step of an attack.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream. The same seed yields the same draws.
///
/// Backed by ChaCha8; the seed is the only state a run record needs to
/// replay an attack.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Name of the generator, stored alongside seeds in run records.
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform real in `[lo, hi)`. Returns `lo` when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        self.rng.random_range(lo..hi)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[lo, hi]`, both ends inclusive.
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi, "empty integer range [{lo}, {hi}]");
        self.rng.random_range(lo..=hi)
    }

    /// `size` distinct indices drawn from `0..len`, in draw order.
    pub fn choose_without_replacement(&mut self, len: usize, size: usize) -> Vec<usize> {
        assert!(size <= len, "cannot choose {size} of {len} without replacement");
        index::sample(&mut self.rng, len, size).into_vec()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
