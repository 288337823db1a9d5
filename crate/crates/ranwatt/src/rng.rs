//! Deterministic random-number plumbing shared by every module.
//!
//! All stochastic steps (feature subsetting, bootstrap resampling, stage
//! subsampling, LIME perturbation, Shapley permutation draws) run on the
//! ChaCha8 stream cipher generator, which produces the same sequence on
//! every platform. Independent streams are derived from a root seed plus a
//! short textual label and an index, so adding a consumer never shifts the
//! draws seen by another.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a child seed from `(seed, label, index)`.
///
/// The derivation is FNV-1a over the little-endian seed bytes, the label
/// bytes, and the little-endian index bytes, followed by a splitmix64
/// finalizer to spread low-entropy inputs across the full 64-bit range.
pub fn sub_seed(seed: u64, label: &str, index: u64) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    for b in label.as_bytes() {
        h = (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME);
    }
    for b in index.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A generator seeded directly from a root seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generator on the independent stream `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, label, index))
}

/// Draws `k` distinct indices from `0..n` by partial Fisher-Yates.
///
/// Returned in draw order. Panics if `k > n`.
pub fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct indices from 0..{n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}
