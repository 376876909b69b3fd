//! Deterministic splitting of one root seed into per-stage seeds.
//!
//! A stage seed is the first eight bytes (little endian) of
//! `SHA-256(root_seed_le || label)`. Labels are short ASCII tags such as
//! `"synth"` or `"train/s07"`, so re-running a single stage reproduces the
//! exact stream it saw in a full run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(root: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, label))
}
