//! Deterministic seed derivation.
//!
//! Every trace, trial and candidate gets its own generator derived from the
//! experiment seed and a path of indices, so results do not depend on the
//! order in which independent runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and an index.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix(parent ^ mix(index.wrapping_add(0x6A09_E667_F3BC_C908)))
}

/// Derive a child seed from a path of indices.
pub fn derive_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |acc, &i| derive(acc, i))
}

/// Generator for one purpose-specific stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
