//! One simulated blockchain plus the light-client registry it keeps of its
//! peers' headers.
//!
//! A header at height `h` commits the state after executing block `h`.
//! Finality is purely a depth rule: height `h` is final once the head is at
//! least `p` blocks past it.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecError, Decode, Encode, Reader, Writer};
use crate::hash::{hash_bytes, hash_parts, Address, ChainId, Hash256};
use crate::merkle;
use crate::state_proof::{self, ContractProof};
use crate::time::SimTime;
use crate::vm::{
    execute_tx, view, AbortReason, BehaviorRegistry, BlockEnv, CallResult, ContractRecord,
    GasMode, GasSchedule, Receipt, StateSnapshot, Status, Transaction, TxKind, Value, WorldState,
};

pub const DEFAULT_BLOCK_LIMIT: usize = 250;
pub const DEFAULT_HISTORY_LIMIT: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("block at {now} is too early, next block due at {due}")]
    TooEarly { now: SimTime, due: SimTime },
    #[error("genesis not sealed")]
    NotSealed,
    #[error("genesis already sealed")]
    AlreadySealed,
    #[error("duplicate transaction {0}")]
    DuplicateTx(Hash256),
    #[error("height {height} is beyond head {head}")]
    UnknownHeight { height: u64, head: u64 },
    #[error("height {0} is not final")]
    NotFinal(u64),
    #[error("state at height {0} has been pruned")]
    Pruned(u64),
    #[error("contract {0} not found")]
    UnknownContract(Address),
    #[error("unknown peer chain {0}")]
    UnknownPeer(ChainId),
    #[error("header {got} from {chain} does not extend head {head}")]
    HeaderGap { chain: ChainId, head: u64, got: u64 },
    #[error("header from {0} does not link to its parent")]
    BadParent(ChainId),
    #[error("genesis transaction aborted: {0}")]
    GenesisAbort(AbortReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub id: ChainId,
    pub block_interval: SimTime,
    /// Finality depth in blocks.
    pub p: u64,
    pub gas_mode: GasMode,
    #[serde(default)]
    pub gas: Option<GasSchedule>,
    #[serde(default = "default_block_limit")]
    pub block_limit: usize,
    #[serde(default = "default_history_limit")]
    pub history_limit: usize,
}

fn default_block_limit() -> usize {
    DEFAULT_BLOCK_LIMIT
}

fn default_history_limit() -> usize {
    DEFAULT_HISTORY_LIMIT
}

impl ChainConfig {
    /// Tendermint-style chain: 5 s blocks, `p = 2`, no code deposit.
    pub fn burrow_like(id: ChainId) -> Self {
        ChainConfig {
            id,
            block_interval: SimTime::from_secs(5),
            p: 2,
            gas_mode: GasMode::BurrowLike,
            gas: None,
            block_limit: DEFAULT_BLOCK_LIMIT,
            history_limit: DEFAULT_HISTORY_LIMIT,
        }
    }

    /// Proof-of-work style chain: 15 s blocks, `p = 6`, per-byte code deposit.
    pub fn ethereum_like(id: ChainId) -> Self {
        ChainConfig {
            id,
            block_interval: SimTime::from_secs(15),
            p: 6,
            gas_mode: GasMode::EthereumLike,
            gas: None,
            block_limit: DEFAULT_BLOCK_LIMIT,
            history_limit: DEFAULT_HISTORY_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if self.block_interval == SimTime::ZERO {
            return Err(ChainError::InvalidConfig("block_interval must be > 0".into()));
        }
        if self.p < 1 {
            return Err(ChainError::InvalidConfig("p must be >= 1".into()));
        }
        if self.block_limit == 0 {
            return Err(ChainError::InvalidConfig("block_limit must be >= 1".into()));
        }
        if self.history_limit <= self.p as usize {
            return Err(ChainError::InvalidConfig("history_limit must exceed p".into()));
        }
        Ok(())
    }

    pub fn gas_schedule(&self) -> GasSchedule {
        self.gas.unwrap_or_else(|| GasSchedule::for_mode(self.gas_mode))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub chain: ChainId,
    pub height: u64,
    pub parent_hash: Hash256,
    /// Root of the state after executing this block.
    pub state_root: Hash256,
    pub tx_root: Hash256,
    pub timestamp: SimTime,
}

impl BlockHeader {
    pub fn hash(&self) -> Hash256 {
        hash_bytes(&self.encode())
    }
}

impl Encode for BlockHeader {
    fn encode_to(&self, w: &mut Writer) {
        w.chain(self.chain)
            .u64(self.height)
            .hash(&self.parent_hash)
            .hash(&self.state_root)
            .hash(&self.tx_root)
            .u64(self.timestamp.millis());
    }
}

impl Decode for BlockHeader {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(BlockHeader {
            chain: r.chain()?,
            height: r.u64()?,
            parent_hash: r.hash()?,
            state_root: r.hash()?,
            tx_root: r.hash()?,
            timestamp: SimTime(r.u64()?),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

/// Root over transaction hashes in block order.
pub fn tx_root(txs: &[Transaction]) -> Hash256 {
    let hashes: Vec<[u8; 32]> = txs.iter().map(|t| t.hash().0).collect();
    merkle::build_root(&hashes)
}

#[derive(Clone, Debug)]
pub struct ProducedBlock {
    pub header: BlockHeader,
    pub receipts: Vec<Receipt>,
    pub senders: Vec<Address>,
}

/// Headers received from one peer chain.
#[derive(Clone, Debug)]
pub struct PeerHeaders {
    pub p: u64,
    headers: Vec<BlockHeader>,
}

impl PeerHeaders {
    pub fn head(&self) -> Option<&BlockHeader> {
        self.headers.last()
    }

    pub fn get(&self, height: u64) -> Option<&BlockHeader> {
        self.headers.get(height as usize)
    }
}

/// Light-client view of peer chains: every header in height order, no gaps.
#[derive(Clone, Debug, Default)]
pub struct HeaderRegistry {
    peers: BTreeMap<ChainId, PeerHeaders>,
}

impl HeaderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_peer(&mut self, chain: ChainId, p: u64) {
        self.peers.entry(chain).or_insert(PeerHeaders {
            p,
            headers: Vec::new(),
        });
    }

    pub fn peer(&self, chain: ChainId) -> Option<&PeerHeaders> {
        self.peers.get(&chain)
    }

    pub fn receive(&mut self, header: BlockHeader) -> Result<(), ChainError> {
        let peer = self
            .peers
            .get_mut(&header.chain)
            .ok_or(ChainError::UnknownPeer(header.chain))?;
        let expected = peer.headers.len() as u64;
        if header.height != expected {
            return Err(ChainError::HeaderGap {
                chain: header.chain,
                head: expected.saturating_sub(1),
                got: header.height,
            });
        }
        if let Some(prev) = peer.headers.last() {
            if header.parent_hash != prev.hash() {
                return Err(ChainError::BadParent(header.chain));
            }
        }
        peer.headers.push(header);
        Ok(())
    }

    pub fn head_height(&self, chain: ChainId) -> Option<u64> {
        self.peers.get(&chain).and_then(|p| p.head()).map(|h| h.height)
    }

    pub fn is_final(&self, chain: ChainId, height: u64) -> bool {
        match self.peers.get(&chain) {
            Some(peer) => match peer.head() {
                Some(head) => head.height >= height && head.height - height >= peer.p,
                None => false,
            },
            None => false,
        }
    }

    /// Root validity check: `root` is the state root of `src` at `height` and
    /// that height is final under `src`'s depth parameter.
    pub fn v_s(&self, src: ChainId, root: &Hash256, height: u64) -> bool {
        let Some(peer) = self.peers.get(&src) else {
            return false;
        };
        match peer.get(height) {
            Some(h) if h.state_root == *root => self.is_final(src, height),
            _ => false,
        }
    }
}

/// Structured chain activity, written as JSON lines by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ChainEvent {
    BlockProduced {
        chain: ChainId,
        height: u64,
        time: SimTime,
        txs: usize,
        state_root: Hash256,
    },
    TxExecuted {
        chain: ChainId,
        height: u64,
        tx: Hash256,
        kind: TxKind,
        status: Status,
        gas_used: u64,
    },
}

#[derive(Clone, Debug)]
enum GenesisOp {
    Fund(Address, u128),
    Execute(Transaction),
    Relocate(Address, ChainId),
    Import(ContractRecord),
}

#[derive(Clone, Debug)]
struct Pending {
    tx: Transaction,
    hash: Hash256,
    arrival: SimTime,
}

pub struct Chain {
    config: ChainConfig,
    gas: GasSchedule,
    code: Arc<BehaviorRegistry>,
    state: WorldState,
    genesis_ops: Vec<GenesisOp>,
    headers: Vec<BlockHeader>,
    blocks: Vec<Block>,
    snapshots: VecDeque<Arc<StateSnapshot>>,
    mempool: VecDeque<Pending>,
    seen: HashSet<Hash256>,
    registry: HeaderRegistry,
    departures: BTreeMap<Address, u64>,
    log: Option<Vec<ChainEvent>>,
}

impl Chain {
    pub fn new(config: ChainConfig, code: Arc<BehaviorRegistry>) -> Result<Self, ChainError> {
        config.validate()?;
        Ok(Chain {
            gas: config.gas_schedule(),
            config,
            code,
            state: WorldState::new(),
            genesis_ops: Vec::new(),
            headers: Vec::new(),
            blocks: Vec::new(),
            snapshots: VecDeque::new(),
            mempool: VecDeque::new(),
            seen: HashSet::new(),
            registry: HeaderRegistry::new(),
            departures: BTreeMap::new(),
            log: None,
        })
    }

    pub fn id(&self) -> ChainId {
        self.config.id
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn gas_schedule(&self) -> &GasSchedule {
        &self.gas
    }

    pub fn code(&self) -> &Arc<BehaviorRegistry> {
        &self.code
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn registry(&self) -> &HeaderRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut HeaderRegistry {
        &mut self.registry
    }

    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn take_log(&mut self) -> Vec<ChainEvent> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn is_sealed(&self) -> bool {
        !self.headers.is_empty()
    }

    fn ensure_unsealed(&self) -> Result<(), ChainError> {
        if self.is_sealed() {
            Err(ChainError::AlreadySealed)
        } else {
            Ok(())
        }
    }

    pub fn genesis_fund(&mut self, client: Address, amount: u128) -> Result<(), ChainError> {
        self.ensure_unsealed()?;
        self.apply_genesis(GenesisOp::Fund(client, amount))?;
        Ok(())
    }

    /// Executes a transaction directly in the genesis state.
    pub fn genesis_execute(&mut self, tx: Transaction) -> Result<Receipt, ChainError> {
        self.ensure_unsealed()?;
        Ok(self
            .apply_genesis(GenesisOp::Execute(tx))?
            .expect("execute yields a receipt"))
    }

    /// Points a genesis contract at another chain, as if Move1 had run.
    /// Returns the record the destination chain should import.
    pub fn genesis_relocate(&mut self, contract: Address, to: ChainId) -> Result<ContractRecord, ChainError> {
        self.ensure_unsealed()?;
        self.apply_genesis(GenesisOp::Relocate(contract, to))?;
        let mut rec = self.state.contract(&contract).expect("relocated").clone();
        rec.nonce += 1;
        Ok(rec)
    }

    pub fn genesis_import(&mut self, record: ContractRecord) -> Result<(), ChainError> {
        self.ensure_unsealed()?;
        self.apply_genesis(GenesisOp::Import(record))?;
        Ok(())
    }

    fn apply_genesis(&mut self, op: GenesisOp) -> Result<Option<Receipt>, ChainError> {
        let env = self.genesis_env_owned();
        let out = apply_genesis_op(&mut self.state, &self.code, &env, &op)?;
        if let GenesisOp::Relocate(a, _) = &op {
            self.departures.insert(*a, 0);
        }
        self.genesis_ops.push(op);
        Ok(out)
    }

    fn genesis_env_owned(&self) -> OwnedEnv {
        OwnedEnv {
            chain: self.config.id,
            height: 0,
            timestamp: SimTime::ZERO,
            seed: hash_parts(&[b"genesis", &self.config.id.0.to_be_bytes()]),
            gas: self.gas,
        }
    }

    /// Commits the genesis header at height 0, time 0.
    pub fn seal_genesis(&mut self) -> Result<BlockHeader, ChainError> {
        self.ensure_unsealed()?;
        let snapshot = self.state.snapshot(0);
        let header = BlockHeader {
            chain: self.config.id,
            height: 0,
            parent_hash: Hash256::ZERO,
            state_root: snapshot.state_root,
            tx_root: tx_root(&[]),
            timestamp: SimTime::ZERO,
        };
        self.snapshots.push_back(Arc::new(snapshot));
        self.headers.push(header.clone());
        self.blocks.push(Block {
            header: header.clone(),
            transactions: vec![],
        });
        Ok(header)
    }

    pub fn head(&self) -> &BlockHeader {
        self.headers.last().expect("genesis sealed")
    }

    pub fn head_height(&self) -> u64 {
        self.head().height
    }

    pub fn headers(&self) -> &[BlockHeader] {
        &self.headers
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn next_block_due(&self) -> SimTime {
        self.head().timestamp + self.config.block_interval
    }

    /// True iff the head is at least `p` blocks past `height`.
    pub fn is_final(&self, height: u64) -> bool {
        let head = self.head_height();
        height <= head && head - height >= self.config.p
    }

    pub fn v_s(&self, src: ChainId, root: &Hash256, height: u64) -> bool {
        self.registry.v_s(src, root, height)
    }

    pub fn receive_header(&mut self, header: BlockHeader) -> Result<(), ChainError> {
        self.registry.receive(header)
    }

    /// Queues a transaction. It is eligible for blocks produced strictly
    /// after `arrival`.
    pub fn submit_tx(&mut self, tx: Transaction, arrival: SimTime) -> Result<Hash256, ChainError> {
        let hash = tx.hash();
        if !self.seen.insert(hash) {
            return Err(ChainError::DuplicateTx(hash));
        }
        self.mempool.push_back(Pending { tx, hash, arrival });
        Ok(hash)
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn produce_block(&mut self, now: SimTime) -> Result<ProducedBlock, ChainError> {
        if !self.is_sealed() {
            return Err(ChainError::NotSealed);
        }
        let due = self.next_block_due();
        if now < due {
            return Err(ChainError::TooEarly { now, due });
        }
        let parent = self.head().clone();
        let height = parent.height + 1;
        let parent_hash = parent.hash();
        let seed = hash_parts(&[
            b"seed",
            &self.config.id.0.to_be_bytes(),
            &height.to_be_bytes(),
            parent_hash.as_bytes(),
        ]);

        let mut batch = Vec::new();
        while batch.len() < self.config.block_limit {
            match self.mempool.front() {
                Some(p) if p.arrival < now => batch.push(self.mempool.pop_front().unwrap()),
                _ => break,
            }
        }

        let chain = self.config.id;
        let mut receipts = Vec::with_capacity(batch.len());
        let mut senders = Vec::with_capacity(batch.len());
        let mut txs = Vec::with_capacity(batch.len());
        for pending in batch {
            let env = BlockEnv {
                chain,
                height,
                timestamp: now,
                seed,
                gas: self.gas,
                headers: &self.registry,
            };
            let exec = execute_tx(&self.state, &self.code, &env, &pending.tx);
            if let Some(delta) = exec.delta {
                for (addr, rec) in &delta.contracts {
                    if rec.location != chain {
                        let was_here = self
                            .state
                            .contract(addr)
                            .map(|r| r.location == chain)
                            .unwrap_or(true);
                        if was_here {
                            self.departures.insert(*addr, height);
                        }
                    }
                }
                self.state.apply(delta);
            }
            self.state.bump_seq(pending.tx.sender);
            if let Some(log) = self.log.as_mut() {
                log.push(ChainEvent::TxExecuted {
                    chain,
                    height,
                    tx: pending.hash,
                    kind: exec.receipt.kind,
                    status: exec.receipt.status.clone(),
                    gas_used: exec.receipt.gas_used,
                });
            }
            senders.push(pending.tx.sender);
            receipts.push(exec.receipt);
            txs.push(pending.tx);
        }

        let snapshot = self.state.snapshot(height);
        let header = BlockHeader {
            chain,
            height,
            parent_hash,
            state_root: snapshot.state_root,
            tx_root: tx_root(&txs),
            timestamp: now,
        };
        if let Some(log) = self.log.as_mut() {
            log.push(ChainEvent::BlockProduced {
                chain,
                height,
                time: now,
                txs: txs.len(),
                state_root: header.state_root,
            });
        }
        self.snapshots.push_back(Arc::new(snapshot));
        while self.snapshots.len() > self.config.history_limit {
            self.snapshots.pop_front();
        }
        self.headers.push(header.clone());
        self.blocks.push(Block {
            header: header.clone(),
            transactions: txs,
        });
        Ok(ProducedBlock {
            header,
            receipts,
            senders,
        })
    }

    pub fn snapshot(&self, height: u64) -> Result<Arc<StateSnapshot>, ChainError> {
        let head = self.head_height();
        if height > head {
            return Err(ChainError::UnknownHeight { height, head });
        }
        let oldest = self.snapshots.front().map(|s| s.height).unwrap_or(0);
        if height < oldest {
            return Err(ChainError::Pruned(height));
        }
        Ok(self.snapshots[(height - oldest) as usize].clone())
    }

    /// Proof of `address` against the finalized state root at `height`.
    pub fn prove_contract(&self, address: &Address, height: u64) -> Result<ContractProof, ChainError> {
        let head = self.head_height();
        if height > head {
            return Err(ChainError::UnknownHeight { height, head });
        }
        if !self.is_final(height) {
            return Err(ChainError::NotFinal(height));
        }
        let snap = self.snapshot(height)?;
        state_proof::prove_contract(&snap, self.config.id, address)
            .map_err(|_| ChainError::UnknownContract(*address))
    }

    /// Height of the block in which `address` last left this chain.
    pub fn departure_height(&self, address: &Address) -> Option<u64> {
        self.departures.get(address).copied()
    }

    /// Calls a view method against the head state.
    pub fn view(&self, target: Address, method: &str, args: &[Value]) -> CallResult {
        let head = self.head();
        let env = BlockEnv {
            chain: self.config.id,
            height: head.height,
            timestamp: head.timestamp,
            seed: Hash256::ZERO,
            gas: self.gas,
            headers: &self.registry,
        };
        view(&self.state, &self.code, &env, target, method, args)
    }

    /// Re-executes genesis and every block against a fresh state and returns
    /// the recomputed state roots, genesis first.
    ///
    /// Move2 transactions are checked against the registry as it is now,
    /// which only ever holds more headers than at execution time.
    pub fn replay_roots(&self) -> Result<Vec<Hash256>, ChainError> {
        let mut state = WorldState::new();
        let genv = self.genesis_env_owned();
        for op in &self.genesis_ops {
            apply_genesis_op(&mut state, &self.code, &genv, op)?;
        }
        let mut roots = vec![state.state_root()];
        for block in self.blocks.iter().skip(1) {
            let h = &block.header;
            let env = BlockEnv {
                chain: self.config.id,
                height: h.height,
                timestamp: h.timestamp,
                seed: hash_parts(&[
                    b"seed",
                    &self.config.id.0.to_be_bytes(),
                    &h.height.to_be_bytes(),
                    h.parent_hash.as_bytes(),
                ]),
                gas: self.gas,
                headers: &self.registry,
            };
            for tx in &block.transactions {
                if let Some(delta) = execute_tx(&state, &self.code, &env, tx).delta {
                    state.apply(delta);
                }
                state.bump_seq(tx.sender);
            }
            roots.push(state.state_root());
        }
        Ok(roots)
    }
}

struct OwnedEnv {
    chain: ChainId,
    height: u64,
    timestamp: SimTime,
    seed: Hash256,
    gas: GasSchedule,
}

fn apply_genesis_op(
    state: &mut WorldState,
    code: &BehaviorRegistry,
    env: &OwnedEnv,
    op: &GenesisOp,
) -> Result<Option<Receipt>, ChainError> {
    match op {
        GenesisOp::Fund(a, amount) => {
            let bal = state.account(a).balance;
            state.set_balance(*a, bal + amount);
            Ok(None)
        }
        GenesisOp::Execute(tx) => {
            let registry = HeaderRegistry::new();
            let benv = BlockEnv {
                chain: env.chain,
                height: env.height,
                timestamp: env.timestamp,
                seed: env.seed,
                gas: env.gas,
                headers: &registry,
            };
            let exec = execute_tx(state, code, &benv, tx);
            match exec.delta {
                Some(delta) => {
                    state.apply(delta);
                    Ok(Some(exec.receipt))
                }
                None => Err(ChainError::GenesisAbort(
                    exec.receipt.status.abort_reason().cloned().unwrap(),
                )),
            }
        }
        GenesisOp::Relocate(a, to) => {
            let mut rec = state
                .contract(a)
                .ok_or(ChainError::UnknownContract(*a))?
                .clone();
            rec.location = *to;
            rec.nonce += 1;
            state.put_contract(rec);
            Ok(None)
        }
        GenesisOp::Import(rec) => {
            state.put_contract(rec.clone());
            Ok(None)
        }
    }
}

/// A set of chains with instantaneous header propagation between them.
///
/// The simulation harness drives chains itself when header delays are
/// configured; this type serves tests and simple scripted scenarios.
pub struct Network {
    chains: Vec<Chain>,
}

impl Network {
    pub fn new(configs: &[ChainConfig], code: Arc<BehaviorRegistry>) -> Result<Self, ChainError> {
        let mut chains = Vec::with_capacity(configs.len());
        for (i, cfg) in configs.iter().enumerate() {
            if cfg.id.0 as usize != i {
                return Err(ChainError::InvalidConfig(format!(
                    "chain ids must be 0..n in order, got {} at {i}",
                    cfg.id
                )));
            }
            let mut chain = Chain::new(*cfg, code.clone())?;
            for peer in configs.iter().filter(|c| c.id != cfg.id) {
                chain.registry_mut().add_peer(peer.id, peer.p);
            }
            chains.push(chain);
        }
        Ok(Network { chains })
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn chain(&self, id: ChainId) -> &Chain {
        &self.chains[id.0 as usize]
    }

    pub fn chain_mut(&mut self, id: ChainId) -> &mut Chain {
        &mut self.chains[id.0 as usize]
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn ids(&self) -> Vec<ChainId> {
        self.chains.iter().map(|c| c.id()).collect()
    }

    pub fn broadcast(&mut self, header: &BlockHeader) -> Result<(), ChainError> {
        for chain in self.chains.iter_mut().filter(|c| c.id() != header.chain) {
            chain.receive_header(header.clone())?;
        }
        Ok(())
    }

    pub fn seal_all(&mut self) -> Result<(), ChainError> {
        let mut headers = Vec::new();
        for chain in &mut self.chains {
            headers.push(chain.seal_genesis()?);
        }
        for h in headers {
            self.broadcast(&h)?;
        }
        Ok(())
    }

    pub fn produce(&mut self, id: ChainId, now: SimTime) -> Result<ProducedBlock, ChainError> {
        let block = self.chain_mut(id).produce_block(now)?;
        self.broadcast(&block.header)?;
        Ok(block)
    }

    /// Produces the next due block across all chains, earliest first, ties by
    /// chain id. Returns the chain and block.
    pub fn step(&mut self) -> Result<(ChainId, ProducedBlock), ChainError> {
        let id = self
            .chains
            .iter()
            .min_by_key(|c| (c.next_block_due(), c.id()))
            .map(|c| c.id())
            .expect("non-empty network");
        let due = self.chain(id).next_block_due();
        Ok((id, self.produce(id, due)?))
    }

    /// Produces every block due at or before `until`.
    pub fn advance_to(&mut self, until: SimTime) -> Result<Vec<(ChainId, ProducedBlock)>, ChainError> {
        let mut out = Vec::new();
        while self
            .chains
            .iter()
            .any(|c| c.next_block_due() <= until)
        {
            out.push(self.step()?);
        }
        Ok(out)
    }

    /// Submits `tx` to chain `id`, advances until it is included, and returns
    /// its receipt.
    pub fn execute(&mut self, id: ChainId, tx: Transaction) -> Result<Receipt, ChainError> {
        let now = self.chain(id).head().timestamp;
        let hash = self.chain_mut(id).submit_tx(tx, now)?;
        loop {
            let (cid, block) = self.step()?;
            if cid == id {
                if let Some(r) = block.receipts.into_iter().find(|r| r.tx_hash == hash) {
                    return Ok(r);
                }
            }
        }
    }

    /// Advances the network until chain `id` has produced `n` more blocks.
    pub fn advance_blocks(&mut self, id: ChainId, n: u64) -> Result<(), ChainError> {
        let target = self.chain(id).head_height() + n;
        while self.chain(id).head_height() < target {
            self.step()?;
        }
        Ok(())
    }
}
