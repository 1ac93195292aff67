//! Seed derivation for reproducible, parallel Monte Carlo streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator used throughout: seedable, 64-bit seed, period far beyond 2^64.
pub type SimRng = ChaCha20Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `master`: `mix64(master ^ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ index)
}

pub fn stream(master: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, index))
}
