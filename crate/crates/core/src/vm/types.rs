use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::hash::{hash_bytes, Address, ChainId, Hash256, Word};
use crate::merkle;
use crate::protocol::Move2Payload;

/// Gas accounting flavour of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GasMode {
    /// Charges a per-byte deposit for contract code on creation.
    EthereumLike,
    /// No per-byte code charge.
    BurrowLike,
}

/// Gas prices of the operations the contract machine meters.
///
/// The arithmetic (3) and contract-creation (32000) prices follow the EVM.
/// The storage, base and code-deposit prices are conventional EVM magnitudes
/// and can be overridden from the experiment config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    pub add_op: u64,
    pub create_contract: u64,
    pub code_deposit_per_byte: u64,
    pub sstore_new: u64,
    pub sstore_update: u64,
    pub base_tx: u64,
}

impl GasSchedule {
    pub fn for_mode(mode: GasMode) -> Self {
        GasSchedule {
            add_op: 3,
            create_contract: 32_000,
            code_deposit_per_byte: match mode {
                GasMode::EthereumLike => 200,
                GasMode::BurrowLike => 0,
            },
            sstore_new: 20_000,
            sstore_update: 5_000,
            base_tx: 21_000,
        }
    }
}

/// Full provable state of one contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractRecord {
    pub address: Address,
    pub code_hash: Hash256,
    #[serde(with = "crate::serde_words::map")]
    pub storage: BTreeMap<Word, Word>,
    /// Native currency of `origin`, in base units.
    pub balance: u128,
    pub nonce: u64,
    /// Chain on which the contract is currently active.
    pub location: ChainId,
    /// Chain the contract was created on.
    pub origin: ChainId,
    #[serde(with = "crate::serde_words::word")]
    pub created_salt: Word,
}

impl ContractRecord {
    pub fn is_active_on(&self, chain: ChainId) -> bool {
        self.location == chain
    }

    pub fn storage_root(&self) -> Hash256 {
        storage_root(&self.storage)
    }

    /// Leaf preimage committed in the contract tree.
    ///
    /// `address ‖ code_hash ‖ balance ‖ nonce ‖ location ‖ origin ‖ salt ‖ storage_root`
    pub fn leaf_bytes(&self, storage_root: &Hash256) -> Vec<u8> {
        let mut w = Writer::new();
        w.address(&self.address)
            .hash(&self.code_hash)
            .u128(self.balance)
            .u64(self.nonce)
            .chain(self.location)
            .chain(self.origin)
            .raw(&self.created_salt)
            .hash(storage_root);
        w.into_bytes()
    }
}

/// Merkle root over a contract's storage, leaves `key ‖ value` in key order.
pub fn storage_root(storage: &BTreeMap<Word, Word>) -> Hash256 {
    let hashes: Vec<Hash256> = storage
        .iter()
        .map(|(k, v)| {
            let mut pre = [0u8; 64];
            pre[..32].copy_from_slice(k);
            pre[32..].copy_from_slice(v);
            merkle::leaf_hash(&pre)
        })
        .collect();
    merkle::root_from_hashes(&hashes)
}

impl Encode for ContractRecord {
    fn encode_to(&self, w: &mut Writer) {
        w.address(&self.address)
            .hash(&self.code_hash)
            .u128(self.balance)
            .u64(self.nonce)
            .chain(self.location)
            .chain(self.origin)
            .raw(&self.created_salt)
            .u32(self.storage.len() as u32);
        for (k, v) in &self.storage {
            w.raw(k).raw(v);
        }
    }
}

impl Decode for ContractRecord {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let address = r.address()?;
        let code_hash = r.hash()?;
        let balance = r.u128()?;
        let nonce = r.u64()?;
        let location = r.chain()?;
        let origin = r.chain()?;
        let created_salt = r.word()?;
        let n = r.read_len()?;
        let mut storage = BTreeMap::new();
        for _ in 0..n {
            let k = r.word()?;
            let v = r.word()?;
            storage.insert(k, v);
        }
        if storage.len() != n {
            return Err(CodecError::BadTag {
                what: "duplicate storage key",
                tag: 0,
            });
        }
        Ok(ContractRecord {
            address,
            code_hash,
            storage,
            balance,
            nonce,
            location,
            origin,
            created_salt,
        })
    }
}

/// Argument or return value of a contract call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    U128(u128),
    Word(#[serde(with = "crate::serde_words::word")] Word),
    Addr(Address),
    Chain(ChainId),
    Bool(bool),
    Bytes(Vec<u8>),
}

impl Value {
    pub fn as_u128(&self) -> Option<u128> {
        match self {
            Value::U128(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_addr(&self) -> Option<Address> {
        match self {
            Value::Addr(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<Word> {
        match self {
            Value::Word(w) => Some(*w),
            _ => None,
        }
    }

    pub fn as_chain(&self) -> Option<ChainId> {
        match self {
            Value::Chain(c) => Some(*c),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl Encode for Value {
    fn encode_to(&self, w: &mut Writer) {
        match self {
            Value::U128(v) => w.u8(0).u128(*v),
            Value::Word(x) => w.u8(1).raw(x),
            Value::Addr(a) => w.u8(2).address(a),
            Value::Chain(c) => w.u8(3).chain(*c),
            Value::Bool(b) => w.u8(4).bool(*b),
            Value::Bytes(b) => w.u8(5).bytes(b),
        };
    }
}

impl Decode for Value {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match r.u8()? {
            0 => Value::U128(r.u128()?),
            1 => Value::Word(r.word()?),
            2 => Value::Addr(r.address()?),
            3 => Value::Chain(r.chain()?),
            4 => Value::Bool(r.bool()?),
            5 => Value::Bytes(r.bytes()?),
            tag => return Err(CodecError::BadTag { what: "value", tag }),
        })
    }
}

fn encode_values(w: &mut Writer, vals: &[Value]) {
    w.u32(vals.len() as u32);
    for v in vals {
        v.encode_to(w);
    }
}

fn decode_values(r: &mut Reader<'_>) -> Result<Vec<Value>, CodecError> {
    let n = r.read_len()?;
    (0..n).map(|_| Value::decode_from(r)).collect()
}

/// Method name plus arguments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Call {
    pub method: String,
    pub args: Vec<Value>,
}

impl Call {
    pub fn new(method: &str, args: Vec<Value>) -> Self {
        Call {
            method: method.to_string(),
            args,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxKind {
    Call,
    Move1,
    Move2,
    Create,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxBody {
    Call {
        target: Address,
        call: Call,
    },
    Create {
        code_hash: Hash256,
        #[serde(with = "crate::serde_words::word")]
        salt: Word,
        args: Vec<Value>,
    },
    Move1 {
        contract: Address,
        to: ChainId,
        args: Vec<Value>,
    },
    Move2(Box<Move2Payload>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    /// Client-chosen sequence number; `(sender, seq)` makes the hash unique.
    pub seq: u64,
    pub value: u128,
    pub gas_limit: u64,
    pub body: TxBody,
}

pub const DEFAULT_GAS_LIMIT: u64 = 50_000_000;

impl Transaction {
    pub fn new(sender: Address, seq: u64, body: TxBody) -> Self {
        Transaction {
            sender,
            seq,
            value: 0,
            gas_limit: DEFAULT_GAS_LIMIT,
            body,
        }
    }

    pub fn call(sender: Address, seq: u64, target: Address, method: &str, args: Vec<Value>) -> Self {
        Self::new(
            sender,
            seq,
            TxBody::Call {
                target,
                call: Call::new(method, args),
            },
        )
    }

    pub fn create(sender: Address, seq: u64, code_hash: Hash256, salt: Word, args: Vec<Value>) -> Self {
        Self::new(
            sender,
            seq,
            TxBody::Create {
                code_hash,
                salt,
                args,
            },
        )
    }

    pub fn move1(sender: Address, seq: u64, contract: Address, to: ChainId) -> Self {
        Self::new(
            sender,
            seq,
            TxBody::Move1 {
                contract,
                to,
                args: vec![],
            },
        )
    }

    pub fn move2(sender: Address, seq: u64, payload: Move2Payload) -> Self {
        Self::new(sender, seq, TxBody::Move2(Box::new(payload)))
    }

    pub fn with_value(mut self, value: u128) -> Self {
        self.value = value;
        self
    }

    pub fn with_gas_limit(mut self, gas_limit: u64) -> Self {
        self.gas_limit = gas_limit;
        self
    }

    pub fn kind(&self) -> TxKind {
        match self.body {
            TxBody::Call { .. } => TxKind::Call,
            TxBody::Create { .. } => TxKind::Create,
            TxBody::Move1 { .. } => TxKind::Move1,
            TxBody::Move2(_) => TxKind::Move2,
        }
    }

    pub fn hash(&self) -> Hash256 {
        hash_bytes(&self.encode())
    }
}

impl Encode for Transaction {
    fn encode_to(&self, w: &mut Writer) {
        w.address(&self.sender)
            .u64(self.seq)
            .u128(self.value)
            .u64(self.gas_limit);
        match &self.body {
            TxBody::Call { target, call } => {
                w.u8(0).address(target).str(&call.method);
                encode_values(w, &call.args);
            }
            TxBody::Create {
                code_hash,
                salt,
                args,
            } => {
                w.u8(1).hash(code_hash).raw(salt);
                encode_values(w, args);
            }
            TxBody::Move1 { contract, to, args } => {
                w.u8(2).address(contract).chain(*to);
                encode_values(w, args);
            }
            TxBody::Move2(p) => {
                w.u8(3);
                p.encode_to(w);
            }
        }
    }
}

impl Decode for Transaction {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let sender = r.address()?;
        let seq = r.u64()?;
        let value = r.u128()?;
        let gas_limit = r.u64()?;
        let body = match r.u8()? {
            0 => {
                let target = r.address()?;
                let method = r.str()?;
                let args = decode_values(r)?;
                TxBody::Call {
                    target,
                    call: Call { method, args },
                }
            }
            1 => {
                let code_hash = r.hash()?;
                let salt = r.word()?;
                let args = decode_values(r)?;
                TxBody::Create {
                    code_hash,
                    salt,
                    args,
                }
            }
            2 => {
                let contract = r.address()?;
                let to = r.chain()?;
                let args = decode_values(r)?;
                TxBody::Move1 { contract, to, args }
            }
            3 => TxBody::Move2(Box::new(Move2Payload::decode_from(r)?)),
            tag => return Err(CodecError::BadTag { what: "tx body", tag }),
        };
        Ok(Transaction {
            sender,
            seq,
            value,
            gas_limit,
            body,
        })
    }
}

/// Why a transaction aborted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
pub enum AbortReason {
    #[error("contract is not active on this chain")]
    ContractMoved,
    #[error("no such contract")]
    NoSuchContract,
    #[error("out of gas")]
    OutOfGas,
    #[error("moveTo hook rejected the move")]
    HookRejected,
    #[error("cannot move to the hosting chain")]
    BadTarget,
    #[error("contract is being moved to a different chain")]
    WrongTarget,
    #[error("state root is not a finalized root of the source chain")]
    BadRoot,
    #[error("invalid contract proof")]
    BadProof,
    #[error("stale contract state")]
    Replay,
    #[error("already minted")]
    AlreadyMinted,
    #[error("sender is not the beneficiary")]
    NotBeneficiary,
    #[error("counterparty origin check failed")]
    BadOrigin,
    #[error("forbidden mating")]
    ForbiddenMating,
    #[error("cat is not pregnant")]
    NotPregnant,
    #[error("unauthorized")]
    Unauthorized,
    #[error("insufficient balance")]
    InsufficientBalance,
    #[error("allowance exceeded")]
    AllowanceExceeded,
    #[error("unknown method {0}")]
    UnknownMethod(String),
    #[error("bad arguments")]
    BadArgs,
    #[error("unregistered code hash")]
    UnknownCode,
    #[error("contract address already in use")]
    AddressCollision,
    #[error("native balance belongs to another chain")]
    ForeignCurrency,
    #[error("{0}")]
    Rejected(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Abort(AbortReason),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }

    pub fn abort_reason(&self) -> Option<&AbortReason> {
        match self {
            Status::Ok => None,
            Status::Abort(r) => Some(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub contract: Address,
    pub name: String,
    pub fields: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: Hash256,
    pub kind: TxKind,
    pub status: Status,
    pub gas_used: u64,
    /// Portion of `gas_used` paid for per-byte code deposits.
    pub code_deposit_gas: u64,
    pub events: Vec<Event>,
    pub output: Vec<Value>,
    pub included_height: u64,
}

impl Receipt {
    pub fn is_ok(&self) -> bool {
        self.status.is_ok()
    }

    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for Receipt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Ok => write!(f, "{:?} ok gas={}", self.kind, self.gas_used),
            Status::Abort(r) => write!(f, "{:?} abort({r}) gas={}", self.kind, self.gas_used),
        }
    }
}
