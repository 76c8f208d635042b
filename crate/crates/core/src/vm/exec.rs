use std::collections::{BTreeMap, BTreeSet};

use crate::chain::HeaderRegistry;
use crate::hash::{hash_parts, Address, ChainId, Hash256, Word};
use crate::protocol;
use crate::time::SimTime;
use crate::vm::behavior::{BehaviorRegistry, CallResult};
use crate::vm::state::{StateDelta, WorldState};
use crate::vm::types::{
    AbortReason, Call, ContractRecord, Event, GasSchedule, Receipt, Status, Transaction, TxBody,
    Value,
};

/// Contract address: first 20 bytes of `H(chain ‖ creator ‖ salt ‖ code_hash)`.
pub fn derive_address(chain: ChainId, creator: &Address, salt: &Word, code_hash: &Hash256) -> Address {
    Address::from_hash(&hash_parts(&[
        &chain.0.to_be_bytes(),
        creator.as_bytes(),
        salt,
        code_hash.as_bytes(),
    ]))
}

/// Per-block execution environment.
pub struct BlockEnv<'a> {
    pub chain: ChainId,
    pub height: u64,
    pub timestamp: SimTime,
    pub seed: Hash256,
    pub gas: GasSchedule,
    pub headers: &'a HeaderRegistry,
}

#[derive(Clone, Copy, Debug)]
struct Frame {
    this: Address,
    caller: Address,
    value: u128,
}

/// Execution context of one transaction.
///
/// Writes go to an overlay over the committed state; the overlay becomes a
/// [`StateDelta`] only if the whole transaction succeeds.
pub struct Ctx<'a> {
    state: &'a WorldState,
    code: &'a BehaviorRegistry,
    env: &'a BlockEnv<'a>,
    origin: Address,
    frames: Vec<Frame>,
    dirty: BTreeMap<Address, ContractRecord>,
    created: BTreeSet<Address>,
    balances: BTreeMap<Address, u128>,
    events: Vec<Event>,
    gas_used: u64,
    gas_limit: u64,
    code_deposit_gas: u64,
}

impl<'a> Ctx<'a> {
    pub fn new(
        state: &'a WorldState,
        code: &'a BehaviorRegistry,
        env: &'a BlockEnv<'a>,
        origin: Address,
        gas_limit: u64,
    ) -> Self {
        Ctx {
            state,
            code,
            env,
            origin,
            frames: Vec::new(),
            dirty: BTreeMap::new(),
            created: BTreeSet::new(),
            balances: BTreeMap::new(),
            events: Vec::new(),
            gas_used: 0,
            gas_limit,
            code_deposit_gas: 0,
        }
    }

    pub fn this(&self) -> Address {
        self.frames.last().map(|f| f.this).unwrap_or(self.origin)
    }

    /// Immediate caller of the running contract (`msg.sender`).
    pub fn caller(&self) -> Address {
        self.frames.last().map(|f| f.caller).unwrap_or(self.origin)
    }

    /// Client that signed the transaction.
    pub fn origin(&self) -> Address {
        self.origin
    }

    /// Native value sent with the current frame.
    pub fn value(&self) -> u128 {
        self.frames.last().map(|f| f.value).unwrap_or(0)
    }

    /// Block timestamp in whole seconds.
    pub fn now(&self) -> u64 {
        self.env.timestamp.secs()
    }

    pub fn height(&self) -> u64 {
        self.env.height
    }

    pub fn chain_id(&self) -> ChainId {
        self.env.chain
    }

    pub fn block_seed(&self) -> Hash256 {
        self.env.seed
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.env.gas
    }

    pub(crate) fn headers(&self) -> &HeaderRegistry {
        self.env.headers
    }

    pub(crate) fn code(&self) -> &'a BehaviorRegistry {
        self.code
    }

    pub fn gas_used(&self) -> u64 {
        self.gas_used
    }

    pub fn charge(&mut self, gas: u64) -> Result<(), AbortReason> {
        self.gas_used = self.gas_used.saturating_add(gas);
        if self.gas_used > self.gas_limit {
            self.gas_used = self.gas_limit;
            return Err(AbortReason::OutOfGas);
        }
        Ok(())
    }

    /// Charges `n` arithmetic operations.
    pub fn ops(&mut self, n: u64) -> Result<(), AbortReason> {
        let g = self.env.gas.add_op * n;
        self.charge(g)
    }

    pub(crate) fn charge_code_deposit(&mut self, code_size: usize) -> Result<(), AbortReason> {
        let g = self.env.gas.code_deposit_per_byte * code_size as u64;
        self.code_deposit_gas += g;
        self.charge(g)
    }

    /// True iff some record on this chain, committed or written by this
    /// transaction, carries `code_hash`.
    pub(crate) fn code_present(&self, code_hash: &Hash256) -> bool {
        self.state.has_code(code_hash) || self.dirty.values().any(|r| r.code_hash == *code_hash)
    }

    pub fn record(&self, address: &Address) -> Option<&ContractRecord> {
        self.dirty
            .get(address)
            .or_else(|| self.state.contract(address))
    }

    /// Mutable record of a contract active on this chain.
    pub(crate) fn record_mut(&mut self, address: &Address) -> Result<&mut ContractRecord, AbortReason> {
        if !self.dirty.contains_key(address) {
            let rec = self
                .state
                .contract(address)
                .ok_or(AbortReason::NoSuchContract)?
                .clone();
            self.dirty.insert(*address, rec);
        }
        let chain = self.env.chain;
        let rec = self.dirty.get_mut(address).expect("inserted above");
        if !rec.is_active_on(chain) {
            return Err(AbortReason::ContractMoved);
        }
        Ok(rec)
    }

    /// Writes a record without the activity check; used when a contract is
    /// recreated by a move.
    pub(crate) fn install_record(&mut self, record: ContractRecord) {
        self.dirty.insert(record.address, record);
    }

    pub(crate) fn watermark(&self, address: &Address) -> Option<u64> {
        self.state.watermarks().get(address)
    }

    pub fn sload(&self, key: &Word) -> Word {
        self.record(&self.this())
            .and_then(|r| r.storage.get(key).copied())
            .unwrap_or([0u8; 32])
    }

    pub fn sstore(&mut self, key: Word, value: Word) -> Result<(), AbortReason> {
        let this = self.this();
        let exists = self
            .record(&this)
            .ok_or(AbortReason::NoSuchContract)?
            .storage
            .contains_key(&key);
        let gas = if exists {
            self.env.gas.sstore_update
        } else {
            self.env.gas.sstore_new
        };
        self.charge(gas)?;
        self.record_mut(&this)?.storage.insert(key, value);
        Ok(())
    }

    /// Native balance of the running contract.
    pub fn balance(&self) -> u128 {
        self.record(&self.this()).map(|r| r.balance).unwrap_or(0)
    }

    pub fn client_balance(&self, client: &Address) -> u128 {
        self.balances
            .get(client)
            .copied()
            .unwrap_or_else(|| self.state.account(client).balance)
    }

    fn set_client_balance(&mut self, client: Address, balance: u128) {
        self.balances.insert(client, balance);
    }

    /// Pays native currency from the running contract to a client account.
    /// Only currency of the hosting chain can be paid out.
    pub fn pay_client(&mut self, to: Address, amount: u128) -> Result<(), AbortReason> {
        let this = self.this();
        let chain = self.env.chain;
        let rec = self.record_mut(&this)?;
        if rec.origin != chain {
            return Err(AbortReason::ForeignCurrency);
        }
        if rec.balance < amount {
            return Err(AbortReason::InsufficientBalance);
        }
        rec.balance -= amount;
        let b = self.client_balance(&to);
        self.set_client_balance(to, b + amount);
        Ok(())
    }

    pub fn emit(&mut self, name: &str, fields: Vec<Value>) {
        let contract = self.this();
        self.events.push(Event {
            contract,
            name: name.to_string(),
            fields,
        });
    }

    /// Emits an event attributed to `contract` rather than the running frame.
    pub(crate) fn emit_for(&mut self, contract: Address, name: &str, fields: Vec<Value>) {
        self.events.push(Event {
            contract,
            name: name.to_string(),
            fields,
        });
    }

    /// Calls `method` on `target`. Non-view methods require `target` to be
    /// active on this chain.
    pub fn call(&mut self, target: Address, method: &str, args: &[Value]) -> CallResult {
        self.call_with_value(target, method, args, 0)
    }

    fn call_with_value(&mut self, target: Address, method: &str, args: &[Value], value: u128) -> CallResult {
        let rec = self.record(&target).ok_or(AbortReason::NoSuchContract)?;
        let active = rec.is_active_on(self.env.chain);
        let code: &'a BehaviorRegistry = self.code;
        let behavior = code.get(&rec.code_hash).ok_or(AbortReason::UnknownCode)?;
        if !active && (value > 0 || !behavior.is_view(method)) {
            return Err(AbortReason::ContractMoved);
        }
        let caller = self.this();
        self.frames.push(Frame {
            this: target,
            caller,
            value,
        });
        let out = behavior.call(self, method, args);
        self.frames.pop();
        out
    }

    /// Creates a contract from the running frame (or from the sender at top
    /// level) and runs its constructor.
    pub fn create(&mut self, code_hash: Hash256, salt: Word, args: &[Value], value: u128) -> Result<Address, AbortReason> {
        let code: &'a BehaviorRegistry = self.code;
        let behavior = code.get(&code_hash).ok_or(AbortReason::UnknownCode)?;
        self.charge(self.env.gas.create_contract)?;
        self.charge_code_deposit(behavior.code_size())?;
        let creator = self.this();
        let address = derive_address(self.env.chain, &creator, &salt, &code_hash);
        if self.record(&address).is_some() {
            return Err(AbortReason::AddressCollision);
        }
        if value > 0 && !self.frames.is_empty() {
            let chain = self.env.chain;
            let rec = self.record_mut(&creator)?;
            if rec.origin != chain {
                return Err(AbortReason::ForeignCurrency);
            }
            if rec.balance < value {
                return Err(AbortReason::InsufficientBalance);
            }
            rec.balance -= value;
        }
        let chain = self.env.chain;
        self.install_record(ContractRecord {
            address,
            code_hash,
            storage: BTreeMap::new(),
            balance: value,
            nonce: 0,
            location: chain,
            origin: chain,
            created_salt: salt,
        });
        self.created.insert(address);
        self.frames.push(Frame {
            this: address,
            caller: creator,
            value,
        });
        let out = behavior.construct(self, args);
        self.frames.pop();
        out?;
        self.emit("ContractCreated", vec![Value::Addr(address)]);
        Ok(address)
    }

    /// Locks `contract` on this chain and points its location at `to`.
    /// Callable at top level (a Move1 transaction) or from another contract.
    pub fn move_contract(&mut self, contract: Address, to: ChainId, args: &[Value]) -> Result<(), AbortReason> {
        let rec = self.record(&contract).ok_or(AbortReason::NoSuchContract)?;
        if to == self.env.chain {
            return Err(AbortReason::BadTarget);
        }
        if !rec.is_active_on(self.env.chain) {
            return Err(AbortReason::ContractMoved);
        }
        let code: &'a BehaviorRegistry = self.code;
        let behavior = code.get(&rec.code_hash).ok_or(AbortReason::UnknownCode)?;
        let caller = self.this();
        self.frames.push(Frame {
            this: contract,
            caller,
            value: 0,
        });
        let hook = behavior.move_to(self, to, args);
        self.frames.pop();
        hook.map_err(|e| match e {
            AbortReason::OutOfGas => AbortReason::OutOfGas,
            _ => AbortReason::HookRejected,
        })?;
        self.charge(self.env.gas.sstore_update)?;
        self.record_mut(&contract)?.location = to;
        self.events.push(Event {
            contract,
            name: "Moved".into(),
            fields: vec![Value::Chain(to)],
        });
        Ok(())
    }

    /// Runs the `moveFinish` hook of a freshly recreated contract.
    pub(crate) fn run_move_finish(&mut self, contract: Address) -> Result<(), AbortReason> {
        let rec = self.record(&contract).ok_or(AbortReason::NoSuchContract)?;
        let code: &'a BehaviorRegistry = self.code;
        let behavior = code.get(&rec.code_hash).ok_or(AbortReason::UnknownCode)?;
        let caller = self.this();
        self.frames.push(Frame {
            this: contract,
            caller,
            value: 0,
        });
        let out = behavior.move_finish(self);
        self.frames.pop();
        out
    }

    fn transfer_in(&mut self, target: &Address, value: u128) -> Result<(), AbortReason> {
        if value == 0 {
            return Ok(());
        }
        let sender = self.origin;
        let bal = self.client_balance(&sender);
        if bal < value {
            return Err(AbortReason::InsufficientBalance);
        }
        let chain = self.env.chain;
        let rec = self.record_mut(target)?;
        if rec.origin != chain {
            return Err(AbortReason::ForeignCurrency);
        }
        rec.balance += value;
        self.set_client_balance(sender, bal - value);
        Ok(())
    }

    fn run(&mut self, tx: &Transaction) -> CallResult {
        self.charge(self.env.gas.base_tx)?;
        match &tx.body {
            TxBody::Call { target, call } => {
                let Call { method, args } = call;
                if tx.value > 0 {
                    if self.record(target).is_none() {
                        return Err(AbortReason::NoSuchContract);
                    }
                    self.transfer_in(target, tx.value)?;
                }
                self.call_with_value(*target, method, args, tx.value)
            }
            TxBody::Create {
                code_hash,
                salt,
                args,
            } => {
                if tx.value > 0 {
                    let bal = self.client_balance(&tx.sender);
                    if bal < tx.value {
                        return Err(AbortReason::InsufficientBalance);
                    }
                    self.set_client_balance(tx.sender, bal - tx.value);
                }
                let a = self.create(*code_hash, *salt, args, tx.value)?;
                Ok(vec![Value::Addr(a)])
            }
            TxBody::Move1 { contract, to, args } => {
                if tx.value > 0 {
                    return Err(AbortReason::BadArgs);
                }
                self.move_contract(*contract, *to, args)?;
                Ok(vec![])
            }
            TxBody::Move2(payload) => {
                if tx.value > 0 {
                    return Err(AbortReason::BadArgs);
                }
                protocol::execute_move2(self, payload)?;
                Ok(vec![])
            }
        }
    }

    /// Consumes the context. Every pre-existing contract written by the
    /// transaction has its nonce bumped; contracts created by it keep nonce 0.
    fn into_delta(self) -> StateDelta {
        let created = self.created;
        let contracts = self
            .dirty
            .into_iter()
            .map(|(a, mut r)| {
                if !created.contains(&a) {
                    r.nonce += 1;
                }
                (a, r)
            })
            .collect();
        StateDelta {
            contracts,
            balances: self.balances,
        }
    }
}

/// Result of executing one transaction against a state.
pub struct Execution {
    pub receipt: Receipt,
    /// Present iff the receipt is OK.
    pub delta: Option<StateDelta>,
}

pub fn execute_tx(
    state: &WorldState,
    code: &BehaviorRegistry,
    env: &BlockEnv<'_>,
    tx: &Transaction,
) -> Execution {
    let mut ctx = Ctx::new(state, code, env, tx.sender, tx.gas_limit);
    let result = ctx.run(tx);
    let gas_used = ctx.gas_used;
    let code_deposit_gas = ctx.code_deposit_gas;
    let mut receipt = Receipt {
        tx_hash: tx.hash(),
        kind: tx.kind(),
        status: Status::Ok,
        gas_used,
        code_deposit_gas,
        events: Vec::new(),
        output: Vec::new(),
        included_height: env.height,
    };
    match result {
        Ok(output) => {
            receipt.output = output;
            receipt.events = std::mem::take(&mut ctx.events);
            Execution {
                receipt,
                delta: Some(ctx.into_delta()),
            }
        }
        Err(reason) => {
            receipt.status = Status::Abort(reason);
            Execution {
                receipt,
                delta: None,
            }
        }
    }
}

/// Runs a view method against committed state without producing a delta.
pub fn view(
    state: &WorldState,
    code: &BehaviorRegistry,
    env: &BlockEnv<'_>,
    target: Address,
    method: &str,
    args: &[Value],
) -> CallResult {
    let mut ctx = Ctx::new(state, code, env, Address::ZERO, u64::MAX);
    let rec = state.contract(&target).ok_or(AbortReason::NoSuchContract)?;
    let behavior = code.get(&rec.code_hash).ok_or(AbortReason::UnknownCode)?;
    if !behavior.is_view(method) {
        return Err(AbortReason::UnknownMethod(method.to_string()));
    }
    ctx.call(target, method, args)
}
