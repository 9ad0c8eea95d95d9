//! Pluggable collision-resistant hashing.
//!
//! Every digest in the ledger is derived from a single configured algorithm
//! with at least 32 bytes of output. Event fields use the first 16 bytes,
//! Merkle nodes the first 32, and event identifiers the first 8 (read as a
//! little-endian `u64`).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512_256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    Sha512_256,
}

impl HashAlgorithm {
    /// Wire identifier used in snapshot export headers.
    pub fn id(self) -> u16 {
        match self {
            HashAlgorithm::Sha256 => 1,
            HashAlgorithm::Sha512_256 => 2,
        }
    }

    pub fn from_id(id: u16) -> Result<Self> {
        match id {
            1 => Ok(HashAlgorithm::Sha256),
            2 => Ok(HashAlgorithm::Sha512_256),
            other => Err(Error::Format(format!("unknown hash algorithm id {other}"))),
        }
    }

    pub fn digest32(self, parts: &[&[u8]]) -> [u8; 32] {
        match self {
            HashAlgorithm::Sha256 => {
                let mut h = Sha256::new();
                for p in parts {
                    h.update(p);
                }
                h.finalize().into()
            }
            HashAlgorithm::Sha512_256 => {
                let mut h = Sha512_256::new();
                for p in parts {
                    h.update(p);
                }
                h.finalize().into()
            }
        }
    }

    pub fn digest16(self, bytes: &[u8]) -> [u8; 16] {
        let full = self.digest32(&[bytes]);
        let mut out = [0u8; 16];
        out.copy_from_slice(&full[..16]);
        out
    }

    pub fn digest64(self, bytes: &[u8]) -> u64 {
        let full = self.digest32(&[bytes]);
        let mut out = [0u8; 8];
        out.copy_from_slice(&full[..8]);
        u64::from_le_bytes(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        let d = HashAlgorithm::Sha256.digest32(&[b"abc"]);
        assert_eq!(d[0], 0xba);
        assert_eq!(d[31], 0xad);
    }

    #[test]
    fn parts_concatenate() {
        let a = HashAlgorithm::Sha512_256.digest32(&[b"ab", b"c"]);
        let b = HashAlgorithm::Sha512_256.digest32(&[b"abc"]);
        assert_eq!(a, b);
        assert_ne!(a, HashAlgorithm::Sha256.digest32(&[b"abc"]));
    }

    #[test]
    fn id_round_trip() {
        for alg in [HashAlgorithm::Sha256, HashAlgorithm::Sha512_256] {
            assert_eq!(HashAlgorithm::from_id(alg.id()).unwrap(), alg);
        }
        assert!(HashAlgorithm::from_id(99).is_err());
    }
}
