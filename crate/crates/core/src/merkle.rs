//! Binary Merkle tree with domain-separated leaf and inner hashing.
//!
//! Leaves hash as `H(0x00 ‖ item)`, inner nodes as `H(0x01 ‖ left ‖ right)`.
//! An odd node at the end of a level is promoted unchanged to the next level,
//! so no leaf is ever duplicated. The empty tree has the fixed root
//! `H(0x00 ‖ "EMPTY")`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{hash_parts, Hash256};

const LEAF_TAG: u8 = 0x00;
const INNER_TAG: u8 = 0x01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
}

/// One step of an authentication path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub sibling: Hash256,
    pub sibling_on_left: bool,
}

/// Authentication path from a leaf to the root.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MerkleProof {
    pub leaf_index: u64,
    pub path: Vec<PathStep>,
}

pub fn leaf_hash(item: &[u8]) -> Hash256 {
    hash_parts(&[&[LEAF_TAG], item])
}

pub fn inner_hash(left: &Hash256, right: &Hash256) -> Hash256 {
    hash_parts(&[&[INNER_TAG], left.as_bytes(), right.as_bytes()])
}

pub fn empty_root() -> Hash256 {
    hash_parts(&[&[LEAF_TAG], b"EMPTY"])
}

/// Root over raw leaf items. Callers sort the leaves by key beforehand.
pub fn build_root<T: AsRef<[u8]>>(leaves: &[T]) -> Hash256 {
    let hashes: Vec<Hash256> = leaves.iter().map(|l| leaf_hash(l.as_ref())).collect();
    root_from_hashes(&hashes)
}

/// Root over already-hashed leaves.
pub fn root_from_hashes(leaf_hashes: &[Hash256]) -> Hash256 {
    if leaf_hashes.is_empty() {
        return empty_root();
    }
    let mut level = leaf_hashes.to_vec();
    while level.len() > 1 {
        level = next_level(&level);
    }
    level[0]
}

fn next_level(level: &[Hash256]) -> Vec<Hash256> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => inner_hash(l, r),
            [odd] => *odd,
            _ => unreachable!(),
        })
        .collect()
}

pub fn prove<T: AsRef<[u8]>>(leaves: &[T], index: usize) -> Result<MerkleProof, MerkleError> {
    let hashes: Vec<Hash256> = leaves.iter().map(|l| leaf_hash(l.as_ref())).collect();
    prove_from_hashes(&hashes, index)
}

pub fn prove_from_hashes(
    leaf_hashes: &[Hash256],
    index: usize,
) -> Result<MerkleProof, MerkleError> {
    if index >= leaf_hashes.len() {
        return Err(MerkleError::IndexOutOfRange {
            index,
            len: leaf_hashes.len(),
        });
    }
    let mut path = Vec::new();
    let mut level = leaf_hashes.to_vec();
    let mut pos = index;
    while level.len() > 1 {
        let sibling = pos ^ 1;
        if sibling < level.len() {
            path.push(PathStep {
                sibling: level[sibling],
                sibling_on_left: sibling < pos,
            });
        }
        level = next_level(&level);
        pos /= 2;
    }
    Ok(MerkleProof {
        leaf_index: index as u64,
        path,
    })
}

/// Folds a leaf hash through the path and returns the implied root.
pub fn fold_path(leaf: Hash256, path: &[PathStep]) -> Hash256 {
    path.iter().fold(leaf, |acc, step| {
        if step.sibling_on_left {
            inner_hash(&step.sibling, &acc)
        } else {
            inner_hash(&acc, &step.sibling)
        }
    })
}

pub fn verify_proof(root: &Hash256, leaf: &[u8], proof: &MerkleProof) -> bool {
    fold_path(leaf_hash(leaf), &proof.path) == *root
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::hash_bytes;

    fn leaves(n: usize) -> Vec<Vec<u8>> {
        (0..n).map(|i| format!("leaf-{i}").into_bytes()).collect()
    }

    #[test]
    fn empty_tree_is_sentinel() {
        let none: Vec<Vec<u8>> = vec![];
        assert_eq!(build_root(&none), empty_root());
        let mut pre = vec![0u8];
        pre.extend_from_slice(b"EMPTY");
        assert_eq!(empty_root(), hash_bytes(&pre));
    }

    #[test]
    fn empty_item_is_well_defined() {
        assert_eq!(leaf_hash(&[]), hash_bytes(&[0u8]));
    }

    #[test]
    fn single_leaf_root_is_leaf_hash() {
        let l = leaves(1);
        assert_eq!(build_root(&l), leaf_hash(&l[0]));
        let p = prove(&l, 0).unwrap();
        assert!(p.path.is_empty());
        assert!(verify_proof(&leaf_hash(&l[0]), &l[0], &p));
    }

    #[test]
    fn four_leaves_hand_chained() {
        let l = leaves(4);
        let h: Vec<Hash256> = l.iter().map(|x| leaf_hash(x)).collect();
        let expect = inner_hash(&inner_hash(&h[0], &h[1]), &inner_hash(&h[2], &h[3]));
        assert_eq!(build_root(&l), expect);
    }

    #[test]
    fn odd_node_is_promoted() {
        let l = leaves(3);
        let h: Vec<Hash256> = l.iter().map(|x| leaf_hash(x)).collect();
        assert_eq!(build_root(&l), inner_hash(&inner_hash(&h[0], &h[1]), &h[2]));
        let p = prove(&l, 2).unwrap();
        assert_eq!(p.path.len(), 1);
    }

    #[test]
    fn eight_leaves_path_has_three_steps() {
        let l = leaves(8);
        assert_eq!(prove(&l, 3).unwrap().path.len(), 3);
    }

    #[test]
    fn out_of_range_index() {
        let l = leaves(5);
        assert_eq!(
            prove(&l, 5),
            Err(MerkleError::IndexOutOfRange { index: 5, len: 5 })
        );
    }

    #[test]
    fn leaf_and_inner_domains_differ() {
        // A leaf preimage starts with 0x00, an inner preimage with 0x01, so no
        // split of a byte string can make the two preimages coincide.
        for len in 0..=70usize {
            let item: Vec<u8> = (0..len as u8).collect();
            let mut leaf_pre = vec![LEAF_TAG];
            leaf_pre.extend_from_slice(&item);
            if len == 64 {
                let mut l = [0u8; 32];
                let mut r = [0u8; 32];
                l.copy_from_slice(&item[..32]);
                r.copy_from_slice(&item[32..]);
                assert_ne!(leaf_hash(&item), inner_hash(&Hash256(l), &Hash256(r)));
            }
            assert_eq!(leaf_pre[0], 0x00);
        }
    }

    #[test]
    fn flipped_sibling_fails() {
        let l = leaves(8);
        let root = build_root(&l);
        let mut p = prove(&l, 5).unwrap();
        p.path[1].sibling.0[7] ^= 0x10;
        assert!(!verify_proof(&root, &l[5], &p));
    }
}
