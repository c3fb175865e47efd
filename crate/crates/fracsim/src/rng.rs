//! Deterministic RNG substreams.
//!
//! Each consumer derives its own stream from the run seed plus a structural
//! key (trace id, side, iteration), so results do not depend on scheduling.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 avalanche step.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-based substream keyed by the run seed and structural parts.
pub fn substream(run_seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut state = mix(run_seed ^ 0x6672616373696d21); // "fracsim!"
    for p in parts {
        state = mix(state ^ mix(*p));
    }
    ChaCha8Rng::seed_from_u64(state)
}
