//! Deterministic random streams.
//!
//! Every stochastic step draws from a `ChaCha8Rng` seeded by mixing a master
//! seed with a stream label and an index, so results are reproducible across
//! platforms and independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in output metadata for the generator in use.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9) + rand_distr 0.5 ziggurat normal";

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, stream, index)`.
pub fn derive(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ stream.rotate_left(17)) ^ index.rotate_left(41))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    rng(derive(seed, stream, index))
}

// Stream labels keep independent uses of one master seed apart.
pub(crate) mod stream {
    pub const COVARIATES: u64 = 1;
    pub const TREATMENT: u64 = 2;
    pub const ORBIT: u64 = 3;
    pub const PAIRING: u64 = 4;
    pub const IMAGE: u64 = 5;
    pub const GRAPH: u64 = 6;
    pub const CAP: u64 = 7;
    pub const FOLDS: u64 = 8;
    pub const BOOTSTRAP: u64 = 9;
    pub const REPLICATE: u64 = 10;
    pub const POOL: u64 = 11;
}
