//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the run seed plus a purpose
//! tag, so changing one phase never shifts the randomness of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, p| splitmix(acc ^ splitmix(*p)))
}

pub fn rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, parts))
}

/// Purpose tags.
pub mod tag {
    pub const INSTANCE: u64 = 1;
    pub const INITIAL_QUERIES: u64 = 2;
    pub const TRAINING: u64 = 3;
    pub const RANDOM_QUERIES: u64 = 4;
    pub const EXPERIMENT: u64 = 5;
}
