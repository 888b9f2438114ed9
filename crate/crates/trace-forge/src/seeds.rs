//! Per-module seed derivation. One global seed enters the run; every
//! randomized operation asks the registry for a named seed derived from
//! (global, counter, label) so partial reruns of one subcommand cannot
//! perturb another's randomness. The registry serializes into the run
//! manifest, making every consumed seed auditable.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct DerivedSeed {
    pub counter: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRegistry {
    pub global: u64,
    pub derived: BTreeMap<String, DerivedSeed>,
}

impl SeedRegistry {
    pub fn new(global: u64) -> Self {
        SeedRegistry { global, derived: BTreeMap::new() }
    }

    /// Returns the seed for `label`, deriving and recording it on first
    /// use. Counters are assigned in request order.
    pub fn seed_for(&mut self, label: &str) -> u64 {
        if let Some(existing) = self.derived.get(label) {
            return existing.seed;
        }
        let counter = self.derived.len() as u32;
        let seed = derive_seed(self.global, counter, label);
        self.derived.insert(label.to_string(), DerivedSeed { counter, seed });
        seed
    }
}

/// Counter-based derivation: sha256 over (global seed, counter, label),
/// truncated to 64 bits. Stable across platforms and releases.
pub fn derive_seed(global: u64, counter: u32, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global.to_le_bytes());
    hasher.update(counter.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
