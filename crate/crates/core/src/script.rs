//! Step-by-step driver for scripted multi-chain scenarios.
//!
//! Every transaction is submitted at the target chain's current head time and
//! the network advances until it is included. Used by tests, the IBC
//! experiment and examples.

use std::sync::Arc;

use crate::chain::{ChainConfig, ChainError, Network};
use crate::hash::{Address, ChainId, Word};
use crate::protocol::{build_move2, MoveError};
use crate::time::SimTime;
use crate::vm::{
    code_hash_of, derive_address, AbortReason, BehaviorRegistry, CallResult, Receipt, Transaction,
    Value,
};

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error("{what} aborted: {reason}")]
    Aborted { what: String, reason: AbortReason },
}

/// Receipts and timings of a complete Move1/Move2 pair.
#[derive(Clone, Debug)]
pub struct MoveOutcome {
    pub move1: Receipt,
    pub move1_time: SimTime,
    /// Earliest time the target could accept the Move2: when the source
    /// block `p` past the Move1 block was produced.
    pub eligible_time: SimTime,
    pub move2: Receipt,
    pub move2_time: SimTime,
}

pub struct Script {
    pub net: Network,
    seq: u64,
    /// Time at which the most recent `send` was included.
    last_inclusion: SimTime,
}

impl Script {
    pub fn new(configs: &[ChainConfig], code: Arc<BehaviorRegistry>) -> Result<Self, ChainError> {
        let mut net = Network::new(configs, code)?;
        net.seal_all()?;
        Ok(Script {
            net,
            seq: 0,
            last_inclusion: SimTime::ZERO,
        })
    }

    /// Wraps a network whose genesis is already sealed.
    pub fn from_network(net: Network) -> Self {
        Script {
            net,
            seq: 0,
            last_inclusion: SimTime::ZERO,
        }
    }

    pub fn now(&self, chain: ChainId) -> SimTime {
        self.net.chain(chain).head().timestamp
    }

    pub fn last_inclusion(&self) -> SimTime {
        self.last_inclusion
    }

    /// Submits `tx` with a fresh sequence number and waits for its receipt.
    pub fn send(&mut self, chain: ChainId, mut tx: Transaction) -> Result<Receipt, ChainError> {
        tx.seq = self.seq;
        self.seq += 1;
        let r = self.net.execute(chain, tx)?;
        self.last_inclusion = self.now(chain);
        Ok(r)
    }

    /// Like [`Script::send`] but turns an abort into an error.
    pub fn send_ok(&mut self, chain: ChainId, tx: Transaction, what: &str) -> Result<Receipt, ScriptError> {
        let r = self.send(chain, tx)?;
        match r.status.abort_reason() {
            None => Ok(r),
            Some(reason) => Err(ScriptError::Aborted {
                what: what.to_string(),
                reason: reason.clone(),
            }),
        }
    }

    pub fn call(
        &mut self,
        chain: ChainId,
        sender: Address,
        target: Address,
        method: &str,
        args: Vec<Value>,
    ) -> Result<Receipt, ChainError> {
        self.send(chain, Transaction::call(sender, 0, target, method, args))
    }

    pub fn create(
        &mut self,
        chain: ChainId,
        owner: Address,
        code: &str,
        salt: Word,
        args: Vec<Value>,
    ) -> Result<(Address, Receipt), ScriptError> {
        let h = code_hash_of(code);
        let r = self.send_ok(chain, Transaction::create(owner, 0, h, salt, args), "create")?;
        Ok((derive_address(chain, &owner, &salt, &h), r))
    }

    pub fn view(&self, chain: ChainId, target: Address, method: &str, args: &[Value]) -> CallResult {
        self.net.chain(chain).view(target, method, args)
    }

    /// Runs Move1 on the contract's current chain, waits for finality there,
    /// and submits the Move2 to `to` from `relayer`.
    pub fn move_contract(
        &mut self,
        contract: Address,
        from: ChainId,
        to: ChainId,
        signer: Address,
        relayer: Address,
    ) -> Result<MoveOutcome, ScriptError> {
        let move1 = self.send_ok(from, Transaction::move1(signer, 0, contract, to), "move1")?;
        let move1_time = self.last_inclusion;
        let p = self.net.chain(from).config().p;
        self.net.advance_blocks(from, p)?;
        let eligible_time = self.now(from);
        let payload = build_move2(self.net.chain(from), &contract)?;
        let move2 = self.send_ok(to, Transaction::move2(relayer, 0, payload), "move2")?;
        Ok(MoveOutcome {
            move1,
            move1_time,
            eligible_time,
            move2,
            move2_time: self.last_inclusion,
        })
    }
}
