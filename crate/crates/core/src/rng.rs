//! Seeded random number generation.
//!
//! Every randomized operation in the crate takes either a `&mut Rng` or an
//! explicit `u64` seed, so runs are reproducible. Parallel experiments derive
//! one independent stream per trial from the master seed.

use rand::SeedableRng;

/// The crate-wide generator. ChaCha8 is fast, seedable, and supports cheap
/// per-stream derivation.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Generator for a master seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream for one trial of a multi-trial experiment. Trials can
/// then run in any order (or in parallel) without changing results.
pub fn trial_rng(seed: u64, trial: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
