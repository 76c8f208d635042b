//! Two-step contract move.
//!
//! Move1 runs on the source chain: the contract's `moveTo` hook may veto, and
//! on success the record's location points at the target, which locks it
//! there. Once that block is final, anyone can take a proof of the locked
//! record against the source state root and submit it to the target as a
//! Move2 transaction, which recreates the contract and runs `moveFinish`.

pub mod relay;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain, ChainError, HeaderRegistry};
use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::hash::{Address, ChainId};
use crate::state_proof::{verify_contract_proof, ContractProof};
use crate::vm::{AbortReason, BehaviorRegistry, Ctx, GasSchedule, Value};

pub use relay::{Relay, RelayFactory};

const PAYLOAD_MAGIC: &str = "MOV2";
const PAYLOAD_VERSION: u8 = 1;

/// Everything a Move2 transaction carries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move2Payload {
    pub proof: ContractProof,
    pub target: ChainId,
}

impl Move2Payload {
    pub fn contract(&self) -> Address {
        self.proof.record.address
    }

    /// Standalone file form: magic, version, payload.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(PAYLOAD_MAGIC.as_bytes()).u8(PAYLOAD_VERSION);
        self.encode_to(&mut w);
        w.into_bytes()
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        r.magic(PAYLOAD_MAGIC)?;
        let v = r.u8()?;
        if v != PAYLOAD_VERSION {
            return Err(CodecError::Version(v));
        }
        let p = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}

impl Encode for Move2Payload {
    fn encode_to(&self, w: &mut Writer) {
        w.chain(self.target);
        self.proof.encode_to(w);
    }
}

impl Decode for Move2Payload {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let target = r.chain()?;
        let proof = ContractProof::decode_from(r)?;
        Ok(Move2Payload { proof, target })
    }
}

/// Highest nonce of any record this chain holds, per contract.
///
/// A chain keeps the stale record of every contract that left it, so a
/// Move2 whose proved nonce does not exceed the watermark carries state the
/// chain has already seen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NonceWatermark {
    nonces: BTreeMap<Address, u64>,
}

impl NonceWatermark {
    pub fn observe(&mut self, contract: Address, nonce: u64) {
        let e = self.nonces.entry(contract).or_insert(nonce);
        *e = (*e).max(nonce);
    }

    pub fn get(&self, contract: &Address) -> Option<u64> {
        self.nonces.get(contract).copied()
    }

    pub fn len(&self) -> usize {
        self.nonces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nonces.is_empty()
    }
}

/// Validates a Move2 payload for chain `here` without executing it.
///
/// Checks run in a fixed order: target, root validity, proof, replay.
pub fn check_move2(
    here: ChainId,
    headers: &HeaderRegistry,
    watermark: Option<u64>,
    payload: &Move2Payload,
) -> Result<(), AbortReason> {
    let proof = &payload.proof;
    if payload.target != here || proof.record.location != here {
        return Err(AbortReason::WrongTarget);
    }
    if !headers.v_s(proof.source_chain, &proof.state_root, proof.source_height) {
        return Err(AbortReason::BadRoot);
    }
    if !verify_contract_proof(&proof.state_root, proof) {
        return Err(AbortReason::BadProof);
    }
    if let Some(w) = watermark {
        if proof.record.nonce <= w {
            return Err(AbortReason::Replay);
        }
    }
    Ok(())
}

/// Gas of a successful Move2 of `payload`, excluding whatever the
/// `moveFinish` hook spends. `code_present` is whether the target already
/// holds a record with the same code.
pub fn move2_gas(gas: &GasSchedule, code: &BehaviorRegistry, payload: &Move2Payload, code_present: bool) -> Option<u64> {
    let size = if code_present {
        0
    } else {
        code.code_size(&payload.proof.record.code_hash)? as u64
    };
    let words = payload.proof.record.storage.len() as u64;
    Some(
        gas.base_tx
            + gas.create_contract
            + gas.sstore_new * words
            + gas.code_deposit_per_byte * size,
    )
}

pub(crate) fn execute_move2(ctx: &mut Ctx<'_>, payload: &Move2Payload) -> Result<(), AbortReason> {
    let address = payload.contract();
    check_move2(ctx.chain_id(), ctx.headers(), ctx.watermark(&address), payload)?;

    let record = payload.proof.record.clone();
    let code_size = ctx
        .code()
        .code_size(&record.code_hash)
        .ok_or(AbortReason::UnknownCode)?;
    let gas = *ctx.schedule();
    ctx.charge(gas.create_contract)?;
    if !ctx.code_present(&record.code_hash) {
        ctx.charge_code_deposit(code_size)?;
    }
    for _ in 0..record.storage.len() {
        ctx.charge(gas.sstore_new)?;
    }
    ctx.install_record(record);
    ctx.run_move_finish(address).map_err(|e| match e {
        AbortReason::OutOfGas => AbortReason::OutOfGas,
        _ => AbortReason::HookRejected,
    })?;
    ctx.emit_for(address, "Arrived", vec![Value::Chain(payload.proof.source_chain)]);
    Ok(())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoveError {
    #[error("contract {0} is unknown on the source chain")]
    UnknownContract(Address),
    #[error("contract {0} has not been moved away")]
    NotMoved(Address),
    #[error("move of {contract} at height {height} is not final yet")]
    NotFinal { contract: Address, height: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Builds the Move2 payload for a contract that left `source`, proved against
/// the state root of the block in which its Move1 executed.
pub fn build_move2(source: &Chain, contract: &Address) -> Result<Move2Payload, MoveError> {
    let rec = source
        .state()
        .contract(contract)
        .ok_or(MoveError::UnknownContract(*contract))?;
    if rec.location == source.id() {
        return Err(MoveError::NotMoved(*contract));
    }
    let height = source
        .departure_height(contract)
        .ok_or(MoveError::NotMoved(*contract))?;
    if !source.is_final(height) {
        return Err(MoveError::NotFinal {
            contract: *contract,
            height,
        });
    }
    let proof = source.prove_contract(contract, height)?;
    Ok(Move2Payload {
        target: proof.record.location,
        proof,
    })
}
