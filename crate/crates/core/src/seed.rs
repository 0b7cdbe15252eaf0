//! Named random streams derived from one root seed.
//!
//! Every stochastic component (anchor selection, sketching, splits, data
//! generation) draws its seed from `derive(root, name)`, so changing one
//! stream never perturbs another. Generators are ChaCha8 seeded with
//! `seed_from_u64`.

use sha2::{Digest, Sha256};

pub const ANCHORS: &str = "anchors";
pub const SKETCH: &str = "sketch";
pub const SPLITS: &str = "splits";
pub const SYNTH: &str = "synth";

/// First 8 bytes (little-endian) of `sha256(root_le || name)`.
pub fn derive(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
