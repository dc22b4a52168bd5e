//! Seed derivation.
//!
//! Every random stream is a `ChaCha8Rng` seeded through `seed_from_u64`.
//! Sub-seeds are the first eight bytes (little-endian) of
//! `SHA-256(master.to_le_bytes() || tag)`, so a stream depends only on the
//! master seed and its tag, never on processing order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type NoiseRng = ChaCha8Rng;

pub fn derive_seed(master: u64, tag: &[u8]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag);
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for one video of a dataset.
pub fn video_seed(master: u64, video_id: &str) -> u64 {
    derive_seed(master, format!("video:{video_id}").as_bytes())
}

/// Seed for the `index`-th component of a combined specification.
pub fn component_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, format!("spec:{index}").as_bytes())
}

pub fn rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}
