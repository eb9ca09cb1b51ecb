//! Seed derivation. Every random stream in the pipeline is keyed by a
//! master seed plus a path of integers, so results never depend on the
//! order in which tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and a path of stream identifiers.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Stable identifier for a short ASCII tag, usable as a path element.
pub fn tag(s: &str) -> u64 {
    // FNV-1a
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
