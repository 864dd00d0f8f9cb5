//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! `u64`. Child seeds are derived from a parent seed and an index with
//! [`derive_seed`], so independent jobs never share generator state and the
//! result does not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `z + gamma`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `base`: `splitmix64(base + splitmix64(index))`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(splitmix64(index)))
}

/// Seed for a path through the seed tree, e.g. `[job, level, step]`.
pub fn derive_path(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |s, &i| derive_seed(s, i))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
