//! Deterministic seed derivation.
//!
//! A single experiment seed fans out into independent per-purpose streams
//! (data generation, weight init, shuffling, augmentation selection,
//! corruption noise, attack init) so any stage can be re-run in isolation
//! and reproduce its exact random sequence.

use sha2::{Digest, Sha256};

/// Derive a child seed from a base seed, a purpose tag, and stream indices.
///
/// The child is the first 8 bytes (little-endian) of
/// `SHA-256(base_le || tag || index_le...)`. Different tags or indices give
/// statistically independent streams; the mapping is stable across platforms.
pub fn derive_seed(base: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(tag.as_bytes());
    for ix in indices {
        hasher.update(ix.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
