//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value. Child seeds are derived from a parent seed and a label with
//! SHA-256, so a stream never depends on the order in which sibling streams
//! were consumed or on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The crate's PRNG: ChaCha with 8 rounds, seeded through `seed_from_u64`.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// First 8 bytes (little endian) of the SHA-256 digest of `bytes`.
pub fn hash64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Derive a child seed from `seed` and a textual label.
pub fn derive(seed: u64, label: &str) -> u64 {
    seed ^ hash64(label.as_bytes())
}

/// Derive a child seed from `seed`, a label and an index.
pub fn derive_indexed(seed: u64, label: &str, index: u64) -> u64 {
    seed ^ hash64(format!("{label}:{index}").as_bytes())
}
