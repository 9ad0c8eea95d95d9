//! Append-only Merkle log over 16-byte event digests.
//!
//! Leaves are kept in insertion order and hashed into a left-balanced binary
//! tree (the largest power of two goes left), so every inclusion proof for a
//! tree of `n` leaves carries at most `ceil(log2 n)` siblings and every
//! earlier root stays reproducible from a prefix of the leaves. Domain tags:
//! `0x00` leaf, `0x01` internal node, `0x02` empty tree.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::HashAlgorithm;

pub const LEAF_TAG: u8 = 0x00;
pub const NODE_TAG: u8 = 0x01;
pub const EMPTY_TAG: u8 = 0x02;

pub type Digest16 = [u8; 16];
pub type Hash32 = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub leaf_index: u64,
    pub tree_size: u64,
    /// Sibling hashes ordered from the leaf level upwards.
    pub siblings: Vec<Hash32>,
}

pub fn empty_root(alg: HashAlgorithm) -> Hash32 {
    alg.digest32(&[&[EMPTY_TAG]])
}

pub fn leaf_hash(alg: HashAlgorithm, digest: &Digest16) -> Hash32 {
    alg.digest32(&[&[LEAF_TAG], digest])
}

pub fn node_hash(alg: HashAlgorithm, left: &Hash32, right: &Hash32) -> Hash32 {
    alg.digest32(&[&[NODE_TAG], left, right])
}

#[derive(Debug, Clone)]
pub struct MerkleLog {
    alg: HashAlgorithm,
    leaves: Vec<Digest16>,
    index: HashMap<Digest16, usize>,
    // levels[k][j] = hash of the perfect subtree covering leaves [j*2^k, (j+1)*2^k)
    levels: Vec<Vec<Hash32>>,
}

impl MerkleLog {
    pub fn new(alg: HashAlgorithm) -> Self {
        MerkleLog {
            alg,
            leaves: Vec::new(),
            index: HashMap::new(),
            levels: vec![Vec::new()],
        }
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.alg
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaves(&self) -> &[Digest16] {
        &self.leaves
    }

    pub fn contains(&self, digest: &Digest16) -> bool {
        self.index.contains_key(digest)
    }

    pub fn position(&self, digest: &Digest16) -> Option<usize> {
        self.index.get(digest).copied()
    }

    /// Appends a leaf. Returns `false` (and changes nothing) if the digest is
    /// already committed.
    pub fn insert(&mut self, digest: Digest16) -> bool {
        if self.index.contains_key(&digest) {
            return false;
        }
        self.index.insert(digest, self.leaves.len());
        self.leaves.push(digest);
        self.levels[0].push(leaf_hash(self.alg, &digest));
        let mut k = 0;
        while self.levels[k].len() % 2 == 0 {
            let n = self.levels[k].len();
            let parent = node_hash(self.alg, &self.levels[k][n - 2], &self.levels[k][n - 1]);
            if self.levels.len() == k + 1 {
                self.levels.push(Vec::new());
            }
            self.levels[k + 1].push(parent);
            k += 1;
        }
        true
    }

    pub fn root(&self) -> Hash32 {
        self.root_at(self.leaves.len())
    }

    /// Root of the tree formed by the first `size` leaves.
    pub fn root_at(&self, size: usize) -> Hash32 {
        assert!(size <= self.leaves.len());
        if size == 0 {
            empty_root(self.alg)
        } else {
            self.subtree(0, size)
        }
    }

    fn subtree(&self, start: usize, end: usize) -> Hash32 {
        let n = end - start;
        if n.is_power_of_two() && start % n == 0 {
            let k = n.trailing_zeros() as usize;
            return self.levels[k][start >> k];
        }
        let split = split_point(n);
        let left = self.subtree(start, start + split);
        let right = self.subtree(start + split, end);
        node_hash(self.alg, &left, &right)
    }

    pub fn prove(&self, digest: &Digest16) -> Result<InclusionProof> {
        self.prove_at(digest, self.leaves.len())
    }

    /// Proof against the root of the first `size` leaves.
    pub fn prove_at(&self, digest: &Digest16, size: usize) -> Result<InclusionProof> {
        let idx = self.position(digest).ok_or(Error::NotFound)?;
        if idx >= size || size > self.leaves.len() {
            return Err(Error::NotFound);
        }
        let mut siblings = Vec::new();
        self.path(idx, 0, size, &mut siblings);
        Ok(InclusionProof {
            leaf_index: idx as u64,
            tree_size: size as u64,
            siblings,
        })
    }

    fn path(&self, m: usize, start: usize, end: usize, out: &mut Vec<Hash32>) {
        let n = end - start;
        if n <= 1 {
            return;
        }
        let k = split_point(n);
        if m < k {
            self.path(m, start, start + k, out);
            out.push(self.subtree(start + k, end));
        } else {
            self.path(m - k, start + k, end, out);
            out.push(self.subtree(start, start + k));
        }
    }
}

/// Largest power of two strictly below `n` (n >= 2).
fn split_point(n: usize) -> usize {
    debug_assert!(n >= 2);
    1 << (usize::BITS - 1 - (n - 1).leading_zeros())
}

/// Checks that `digest` sits at `proof.leaf_index` in a tree of
/// `proof.tree_size` leaves whose root is `root`.
pub fn verify_inclusion(
    alg: HashAlgorithm,
    root: &Hash32,
    proof: &InclusionProof,
    digest: &Digest16,
) -> bool {
    if proof.leaf_index >= proof.tree_size {
        return false;
    }
    let mut fnode = proof.leaf_index;
    let mut snode = proof.tree_size - 1;
    let mut acc = leaf_hash(alg, digest);
    for sib in &proof.siblings {
        if snode == 0 {
            return false;
        }
        if fnode & 1 == 1 || fnode == snode {
            acc = node_hash(alg, sib, &acc);
            if fnode & 1 == 0 {
                while fnode & 1 == 0 && fnode != 0 {
                    fnode >>= 1;
                    snode >>= 1;
                }
            }
        } else {
            acc = node_hash(alg, &acc, sib);
        }
        fnode >>= 1;
        snode >>= 1;
    }
    snode == 0 && &acc == root
}
