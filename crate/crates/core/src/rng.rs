//! Seed handling. Every random draw in the crate goes through a ChaCha8
//! generator built from an explicit 64-bit seed; sub-seeds are derived with
//! SplitMix64 so that independent streams never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Name recorded in run metadata for the sampling algorithm.
pub const SAMPLING_ALGORITHM: &str = "chacha8-partial-fisher-yates/v1";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Stable 64-bit hash of a string under a seed (first 8 bytes of SHA-256).
pub fn stable_hash(seed: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Map a 64-bit value to a uniform real in [0, 1).
pub fn unit_interval(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draw `count` distinct indices from `0..population` by a partial
/// Fisher-Yates shuffle. The returned order is the draw order.
pub fn sample_indices(rng: &mut ChaCha8Rng, population: usize, count: usize) -> Vec<usize> {
    use rand::Rng;
    assert!(count <= population, "sample larger than population");
    let mut pool: Vec<usize> = (0..population).collect();
    for i in 0..count {
        let j = rng.random_range(i..population);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Shuffle a slice in place with the same swap discipline as [`sample_indices`].
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    use rand::Rng;
    let n = items.len();
    for i in 0..n.saturating_sub(1) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}
