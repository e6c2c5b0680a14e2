//! Seed derivation for reproducible sampling.
//!
//! Every random draw is made from a ChaCha stream keyed by the run seed, a
//! stream label and the scale id, so results do not depend on the order in
//! which scales are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Deterministic generator for one `(seed, stream, key)` triple.
pub fn stream(seed: u64, stream: &str, key: &str) -> ChaCha8Rng {
    let mut h = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    h = fnv1a(h, stream.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, key.as_bytes());
    ChaCha8Rng::seed_from_u64(h)
}
