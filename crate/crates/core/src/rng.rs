//! Reproducible stream derivation.
//!
//! Every randomized routine takes a 64-bit master seed. Replica `k` draws
//! from a substream whose seed is obtained by counter-based mixing
//! (SplitMix64 applied to `master + k * golden-gamma`), so replicas can be
//! generated independently, in any order and on any number of threads,
//! while the overall result stays a pure function of `(inputs, seed)`.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Weyl increment used by SplitMix64.
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `k` of `master`.
pub fn substream_seed(master: u64, k: u64) -> u64 {
    splitmix64(master.wrapping_add(k.wrapping_mul(GOLDEN_GAMMA)))
}

/// RNG for substream `k` of `master`.
pub fn substream_rng(master: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, k))
}

/// RNG for the master stream itself.
pub fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed))
}
