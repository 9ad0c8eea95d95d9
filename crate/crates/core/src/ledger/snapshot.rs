//! Binary snapshot export and import.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "AAFL" | version: u16 | hash id: u16 | leaf count: u64 | count x 16-byte digest | root: 32 bytes
//! ```

use serde::{Deserialize, Serialize};

use super::merkle::{Hash32, MerkleLog};
use crate::error::{Error, Result};
use crate::hash::HashAlgorithm;

pub const MAGIC: &[u8; 4] = b"AAFL";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleSnapshot {
    pub root: Hash32,
    pub step_sealed: u32,
    pub leaf_count: u64,
}

/// Serializes the first `size` leaves of `log` together with their root.
pub fn export(log: &MerkleLog, size: usize) -> Vec<u8> {
    let leaves = &log.leaves()[..size];
    let mut out = Vec::with_capacity(16 + leaves.len() * 16 + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&log.algorithm().id().to_le_bytes());
    out.extend_from_slice(&(leaves.len() as u64).to_le_bytes());
    for leaf in leaves {
        out.extend_from_slice(leaf);
    }
    out.extend_from_slice(&log.root_at(size));
    out
}

/// Rebuilds a log from an export, failing unless the recomputed root equals
/// the stored one.
pub fn import(bytes: &[u8]) -> Result<MerkleLog> {
    let header = 4 + 2 + 2 + 8;
    if bytes.len() < header + 32 {
        return Err(Error::Format("truncated snapshot".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let alg = HashAlgorithm::from_id(u16::from_le_bytes([bytes[6], bytes[7]]))?;
    let mut count = [0u8; 8];
    count.copy_from_slice(&bytes[8..16]);
    let count = u64::from_le_bytes(count) as usize;
    let expected = count
        .checked_mul(16)
        .and_then(|n| n.checked_add(header + 32))
        .ok_or_else(|| Error::Format("leaf count overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "length {} does not match {count} leaves",
            bytes.len()
        )));
    }
    let mut log = MerkleLog::new(alg);
    for chunk in bytes[header..header + count * 16].chunks_exact(16) {
        let mut d = [0u8; 16];
        d.copy_from_slice(chunk);
        if !log.insert(d) {
            return Err(Error::Format("duplicate leaf in snapshot".into()));
        }
    }
    let stored = &bytes[header + count * 16..];
    if log.root().as_slice() != stored {
        return Err(Error::Format("root mismatch".into()));
    }
    Ok(log)
}
