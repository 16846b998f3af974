//! Seeded generator streams.
//!
//! Every stochastic operation takes an explicit generator. Streams used by
//! the batch pipeline are keyed by stable identifiers rather than processing
//! order, so parallel execution cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Generator seeded directly from a 64-bit seed.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for one `(seed, key parts…)` stream.
///
/// The key parts are length-prefixed before hashing so `("ab", "c")` and
/// `("a", "bc")` give different streams.
pub fn stream(seed: u64, parts: &[&str]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(b"voxaug-stream-v1");
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}
