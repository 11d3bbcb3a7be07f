//! Deterministic RNG streams derived from a run seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named purposes get distinct streams of the same seed.
pub mod streams {
    pub const POLICY_INIT: u64 = 1;
    pub const CRITIC_INIT: u64 = 2;
    pub const UPDATE: u64 = 3;
    pub const EVAL: u64 = 4;
    pub const DATASET: u64 = 5;
    pub const Q_INIT: u64 = 6;
    /// Actor k uses `ACTOR_BASE + k`.
    pub const ACTOR_BASE: u64 = 1 << 20;
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A 64-bit seed for stream `id`, for APIs that take a seed.
pub fn derive_seed(seed: u64, id: u64) -> u64 {
    stream(seed, id).next_u64()
}
