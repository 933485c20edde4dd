//! Labeled sub-seed derivation.
//!
//! Every random quantity in a run is drawn from a stream whose seed is a pure
//! function of the master seed, a purpose label and the indices of the entity
//! it belongs to. Evaluation order therefore never changes a result, and adding
//! a carrier to a scenario cannot perturb UE placement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Purpose label for UE placement.
pub const PLACEMENT: &str = "placement";
/// Purpose label for log-normal shadowing.
pub const SHADOWING: &str = "shadowing";
/// Purpose label for small-scale fading.
pub const FADING: &str = "fading";

/// Hashes `(master, label, indices)` to a 64-bit sub-seed.
pub fn derive(master: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

/// A fresh generator for the given labeled entity.
pub fn stream(master: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label, indices))
}

/// The sub-seeds of one run, one per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubSeeds {
    pub placement: u64,
    pub shadowing: u64,
    pub fading: u64,
}

impl SubSeeds {
    pub fn new(master: u64) -> Self {
        Self {
            placement: derive(master, PLACEMENT, &[]),
            shadowing: derive(master, SHADOWING, &[]),
            fading: derive(master, FADING, &[]),
        }
    }
}
