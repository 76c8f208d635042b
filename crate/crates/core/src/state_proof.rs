//! Proofs that a contract record is committed under a chain's state root.
//!
//! A state root is `inner_hash(contracts_root, accounts_root)`. A contract
//! proof is the record (with its full storage) plus the path from its leaf in
//! the contract tree, extended by one step carrying `accounts_root`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::hash::{Address, ChainId, Hash256};
use crate::merkle::{self, MerkleProof, PathStep};
use crate::vm::{ContractRecord, StateSnapshot};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractProof {
    pub record: ContractRecord,
    pub record_path: MerkleProof,
    pub source_chain: ChainId,
    pub source_height: u64,
    /// State root the path claims to reach.
    pub state_root: Hash256,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProofError {
    #[error("contract {0} not present in state")]
    UnknownContract(Address),
}

pub fn prove_contract(
    snapshot: &StateSnapshot,
    source_chain: ChainId,
    address: &Address,
) -> Result<ContractProof, ProofError> {
    let index = snapshot
        .contracts
        .keys()
        .position(|a| a == address)
        .ok_or(ProofError::UnknownContract(*address))?;
    let leaves: Vec<Hash256> = snapshot.contracts.values().map(|c| c.leaf_hash).collect();
    let mut record_path =
        merkle::prove_from_hashes(&leaves, index).expect("index comes from the same map");
    record_path.path.push(PathStep {
        sibling: snapshot.accounts_root,
        sibling_on_left: false,
    });
    Ok(ContractProof {
        record: snapshot.contracts[address].record.clone(),
        record_path,
        source_chain,
        source_height: snapshot.height,
        state_root: snapshot.state_root,
    })
}

/// True iff the storage root recomputed from `proof.record.storage`, hashed
/// into the record leaf, folds through the path to `root`.
pub fn verify_contract_proof(root: &Hash256, proof: &ContractProof) -> bool {
    let storage_root = proof.record.storage_root();
    let leaf = proof.record.leaf_bytes(&storage_root);
    merkle::verify_proof(root, &leaf, &proof.record_path)
}

impl Encode for MerkleProof {
    fn encode_to(&self, w: &mut Writer) {
        w.u64(self.leaf_index).u32(self.path.len() as u32);
        for step in &self.path {
            w.hash(&step.sibling).bool(step.sibling_on_left);
        }
    }
}

impl Decode for MerkleProof {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let leaf_index = r.u64()?;
        let n = r.read_len()?;
        let mut path = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let sibling = r.hash()?;
            let sibling_on_left = r.bool()?;
            path.push(PathStep {
                sibling,
                sibling_on_left,
            });
        }
        Ok(MerkleProof { leaf_index, path })
    }
}

impl Encode for ContractProof {
    fn encode_to(&self, w: &mut Writer) {
        w.chain(self.source_chain)
            .u64(self.source_height)
            .hash(&self.state_root);
        let rec = self.record.encode();
        w.bytes(&rec);
        self.record_path.encode_to(w);
    }
}

impl Decode for ContractProof {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let source_chain = r.chain()?;
        let source_height = r.u64()?;
        let state_root = r.hash()?;
        let rec = r.bytes()?;
        let record = ContractRecord::decode(&rec)?;
        let record_path = MerkleProof::decode_from(r)?;
        Ok(ContractProof {
            record,
            record_path,
            source_chain,
            source_height,
            state_root,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::hash::word_from_u128;
    use crate::vm::WorldState;

    fn record(i: u8, words: usize) -> ContractRecord {
        let storage: BTreeMap<_, _> = (0..words as u128)
            .map(|k| (word_from_u128(k), word_from_u128(k * 7 + i as u128)))
            .collect();
        ContractRecord {
            address: Address([i; 20]),
            code_hash: Hash256([1; 32]),
            storage,
            balance: i as u128,
            nonce: 3,
            location: ChainId(2),
            origin: ChainId(1),
            created_salt: [i; 32],
        }
    }

    fn snapshot(n: u8, words: usize) -> StateSnapshot {
        let mut s = WorldState::new();
        for i in 0..n {
            s.put_contract(record(i, words));
        }
        s.set_balance(Address([0xaa; 20]), 10);
        s.snapshot(5)
    }

    #[test]
    fn single_word_roundtrip() {
        let snap = snapshot(4, 1);
        let p = prove_contract(&snap, ChainId(1), &Address([2; 20])).unwrap();
        assert_eq!(p.state_root, snap.state_root);
        assert!(verify_contract_proof(&snap.state_root, &p));
    }

    #[test]
    fn unknown_address_errors() {
        let snap = snapshot(2, 1);
        assert_eq!(
            prove_contract(&snap, ChainId(1), &Address([9; 20])),
            Err(ProofError::UnknownContract(Address([9; 20])))
        );
    }

    #[test]
    fn payload_grows_linearly_in_storage() {
        let small = prove_contract(&snapshot(3, 1), ChainId(1), &Address([1; 20])).unwrap();
        let large = prove_contract(&snapshot(3, 100), ChainId(1), &Address([1; 20])).unwrap();
        assert!(verify_contract_proof(&large.state_root, &large));
        assert_eq!(large.encode().len() - small.encode().len(), 99 * 64);
    }

    #[test]
    fn altered_storage_fails() {
        let snap = snapshot(5, 10);
        let mut p = prove_contract(&snap, ChainId(1), &Address([3; 20])).unwrap();
        let key = *p.record.storage.keys().next().unwrap();
        p.record.storage.insert(key, [0xff; 32]);
        assert!(!verify_contract_proof(&snap.state_root, &p));
    }

    #[test]
    fn truncated_path_fails() {
        let snap = snapshot(6, 2);
        let mut p = prove_contract(&snap, ChainId(1), &Address([3; 20])).unwrap();
        p.record_path.path.pop();
        assert!(!verify_contract_proof(&snap.state_root, &p));
    }

    #[test]
    fn encoding_roundtrip() {
        let snap = snapshot(3, 4);
        let p = prove_contract(&snap, ChainId(1), &Address([0; 20])).unwrap();
        assert_eq!(ContractProof::decode(&p.encode()).unwrap(), p);
    }
}
