//! Seeded random streams.
//!
//! Every source of randomness in the crate is a [`SimRng`] derived from a
//! user seed and a fixed stream label, so independent consumers never share
//! draws and runs are reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream labels. Distinct labels give statistically independent generators
/// for the same seed.
pub mod stream {
    pub const SIMULATION: u64 = 1;
    pub const ARRIVALS: u64 = 2;
    pub const POLICY: u64 = 3;
    pub const AGENT: u64 = 4;
    pub const INIT: u64 = 5;
    pub const TRACE: u64 = 6;
    pub const SLOTS: u64 = 7;
}

pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a base seed with an index (episode, replication) into a new seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `(0, 1]`, safe to feed into `ln`.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}
