//! Deterministic RNG streams for parallel work.
//!
//! Every parallel unit (frame, candidate, point) derives its own stream from
//! a base seed plus integer tags, so results are identical regardless of how
//! work is scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with integer tags into a single derived seed.
pub fn mix_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = splitmix64(seed);
    for &t in tags {
        z = splitmix64(z ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    z
}

/// A counter-derived RNG stream keyed by `(seed, tags...)`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, tags))
}
