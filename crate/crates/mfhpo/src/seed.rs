//! Seed derivation.
//!
//! All randomness in the crate flows from a single root seed through
//! [`derive`]: every run, sweep cell, scenario instance and reference sample
//! gets its own stream keyed by a string tag plus integer indices. The tree is
//! documented in the README; changing it changes every archive byte, so it is
//! covered by the determinism tests.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step; the standard finalizer constants.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `parent` keyed by a stream tag and indices.
pub fn derive(parent: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix(parent ^ fnv1a(tag));
    for ix in indices {
        h = splitmix(h ^ ix);
    }
    h
}

/// The crate-wide RNG, constructed from a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
