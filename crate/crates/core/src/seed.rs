//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha20 generator seeded from a
//! 64-bit value. Child seeds are derived with the SplitMix64 finalizer so that
//! `(parent, stream, index)` maps to a stable, well-mixed child seed on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(parent, parts...)`, folding each part through [`mix64`].
pub fn derive(parent: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(parent), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Trial seed for `(base_seed, dataset_index, trial_index)`.
pub fn trial_seed(base_seed: u64, dataset_index: u64, trial_index: u64) -> u64 {
    derive(base_seed, &[dataset_index, trial_index])
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

// Stream tags for sub-seeds within one pipeline pass.
pub(crate) const STREAM_SAMPLE: u64 = 1;
pub(crate) const STREAM_SPLIT: u64 = 2;
pub(crate) const STREAM_REASSIGN: u64 = 3;
