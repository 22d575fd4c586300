//! Deterministic derivation of independent RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for unit `unit` of a run keyed by `master`. Stable across platforms
/// and independent of scheduling order.
pub fn derive(master: u64, unit: u64) -> u64 {
    mix64(mix64(master) ^ unit.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Seed derived from a path of unit ids, e.g. `[trial, fold]`.
pub fn derive_path(master: u64, units: &[u64]) -> u64 {
    units.iter().fold(master, |acc, &u| derive(acc, u))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
