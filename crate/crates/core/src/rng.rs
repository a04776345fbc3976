//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream seeded by a
//! 64-bit value. Replicates of an experiment get their own stream, with the
//! seed derived from `(master_seed, n, replicate)` through SplitMix64, so
//! results never depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one replicate at one sample size.
pub fn replicate_seed(master: u64, n: u64, replicate: u64) -> u64 {
    mix64(mix64(mix64(master) ^ n) ^ replicate)
}

/// Seed for a named sub-stream of a replicate (e.g. sampling vs. noise).
pub fn substream(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}
