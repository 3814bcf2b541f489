//! Deterministic stream derivation.
//!
//! Every random object in the crate (tree vertex, walk, replicate, sampled
//! environment) owns a 64-bit stream key derived by keyed mixing from its
//! parent object's key. Keys never depend on query order, so two runs with the
//! same master seed agree bit-for-bit on any shared quantity regardless of
//! evaluation order or worker count.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Domain separation tags for the different stream families.
pub mod domain {
    pub const TREE: u64 = 0x5452_4545;
    pub const WALK: u64 = 0x5741_4c4b;
    pub const ENV: u64 = 0x454e_5653;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const URN: u64 = 0x5552_4e53;
}

/// SplitMix64 finalizer; the standard 64-bit mixer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a key with one word of data (a child index, replicate number,
/// domain tag) into a new key.
pub fn mix(key: u64, data: u64) -> u64 {
    splitmix64(key ^ data.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17))
}

/// Stream key for replicate `k` of a run with the given master seed.
pub fn replicate_key(master_seed: u64, k: u64) -> u64 {
    mix(mix(master_seed, domain::REPLICATE), k)
}

pub fn rng_from_key(key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_is_stable() {
        // Pinned values: the on-disk reproducibility story depends on these
        // never changing.
        assert_eq!(splitmix64(0), 16294208416658607535);
        assert_eq!(mix(1, 2), mix(1, 2));
        assert_ne!(mix(1, 2), mix(2, 1));
        assert_ne!(replicate_key(7, 0), replicate_key(7, 1));
    }

    #[test]
    fn rng_streams_are_independent_of_creation_order() {
        use rand::Rng;
        let a1: f64 = rng_from_key(mix(42, 1)).random();
        let b1: f64 = rng_from_key(mix(42, 2)).random();
        let b2: f64 = rng_from_key(mix(42, 2)).random();
        let a2: f64 = rng_from_key(mix(42, 1)).random();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_ne!(a1, b1);
    }
}
