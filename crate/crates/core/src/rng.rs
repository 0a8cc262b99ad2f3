//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every trial, sample and training run owns an RNG derived from a master
//! seed plus a stream path (e.g. `[EVAL_STREAM, snr_bits, trial]`). Results
//! therefore do not depend on iteration order or on how work would be split
//! across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; decorrelates nearby seed inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a stream path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master);
    for &p in path {
        state = mix(state ^ p);
    }
    state
}

/// Builds an independent generator for the given stream path.
pub fn derived_rng(master: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, path))
}
