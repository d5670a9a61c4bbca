use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit FNV-1a; `std`'s hasher is not guaranteed stable across releases.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator whose stream depends only on `(seed, key)`.
pub(crate) fn keyed(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(key.as_bytes()).rotate_left(17))
}
