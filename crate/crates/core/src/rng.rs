//! Counter-based derivation of independent random streams.
//!
//! Every stochastic component draws from its own ChaCha stream, keyed by the
//! experiment's master seed plus a path of integers (stage tag, repetition,
//! match index, player id, ...). Results therefore do not depend on the
//! order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Tags naming the purpose of a derived stream.
pub mod tag {
    pub const TOURNAMENT_MATCH: u64 = 0x7401;
    pub const SAMPLING: u64 = 0x5a11;
    pub const NOISE_A: u64 = 0x40a1;
    pub const NOISE_B: u64 = 0x40b2;
    pub const STRATEGY_A: u64 = 0x57a1;
    pub const STRATEGY_B: u64 = 0x57b2;
    pub const MORAN_RUN: u64 = 0x3041;
    pub const MORAN_FITNESS: u64 = 0x3042;
    pub const MORAN_STEP: u64 = 0x3043;
    pub const BEAUFILS: u64 = 0xbe01;
    pub const AUDIT: u64 = 0xa0d1;
    pub const PROBE: u64 = 0x9b0e;
    pub const SCENARIO: u64 = 0x5ce0;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `path` into `seed`, producing a well-mixed child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &word| splitmix64(acc ^ splitmix64(word)))
}

/// Opens the stream addressed by `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, path))
}
