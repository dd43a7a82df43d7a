//! Replication seed derivation.
//!
//! Per-run seeds are a hash of (master seed, cell key, replication index), so
//! a run's stream depends only on its coordinates, never on scheduling order
//! or worker count. SHA-256 keeps the derivation stable across platforms and
//! process runs, unlike the std hasher.

use sha2::{Digest, Sha256};

/// Derive the ChaCha seed for one replication of one experiment cell.
pub fn derive_seed(master_seed: u64, cell_key: &str, replication: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(cell_key.as_bytes());
    hasher.update([0x1f]);
    hasher.update(replication.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
