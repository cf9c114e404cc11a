//! Seed derivation and keyed hashing.
//!
//! Every random choice in the library is either drawn from a ChaCha stream
//! derived from `(master seed, tags...)` or read off a keyed hash, so that any
//! sub-computation can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn hash2(key: u64, a: u64) -> u64 {
    mix64(mix64(key) ^ a.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

pub fn hash_words(key: u64, words: &[u64]) -> u64 {
    let mut h = mix64(key ^ 0x51_7cc1_b727_220a);
    for &w in words {
        h = mix64(h ^ w.wrapping_mul(0x2545_f491_4f6c_dd1d));
    }
    h
}

/// Uniform value in [0, 1) taken from the top 53 bits of a hash.
#[inline]
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent ChaCha stream for a tagged sub-computation.
pub fn substream(seed: u64, tags: &[u64]) -> Rng {
    let a = hash_words(seed, tags);
    let b = hash_words(a, &[0x6a09_e667, tags.len() as u64]);
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&a.to_le_bytes());
    bytes[8..16].copy_from_slice(&b.to_le_bytes());
    bytes[16..24].copy_from_slice(&mix64(a ^ b).to_le_bytes());
    bytes[24..].copy_from_slice(&mix64(b.rotate_left(17)).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Tags used to separate streams that share a master seed.
pub mod tag {
    pub const PLAN: u64 = 1;
    pub const ROUND: u64 = 2;
    pub const COIN: u64 = 3;
    pub const BUCKET: u64 = 4;
    pub const LEVEL: u64 = 5;
    pub const VERIFY: u64 = 6;
    pub const LABEL: u64 = 7;
    pub const REBUILD: u64 = 8;
    pub const SKETCH: u64 = 9;
    pub const PROJECT: u64 = 10;
}
