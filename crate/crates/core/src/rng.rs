//! Deterministic seed derivation.
//!
//! Every stochastic routine takes an explicit RNG stream. Parallel workers
//! get independently derived streams so results do not depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of tags
/// (experiment id, grid index, trial index, ...).
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}

/// A seeded stream for one worker or one trial.
pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}
