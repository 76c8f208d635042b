//! Sharded replay of a kitties trace in dependency order.
//!
//! Leaves of the dependency DAG are submitted as soon as a slot is free, up
//! to `max_outstanding` transactions in flight (moves included). Promotional
//! cats are minted by a per-shard game contract on `shard_of(owner)`; kittens
//! are born on their dam's chain. When a breeding pair sits on two shards
//! the sire moves to the dam's shard first.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::apps::kitties::KITTY_CORE;
use crate::apps::standard_registry;
use crate::chain::{BlockHeader, ChainConfig, ProducedBlock};
use crate::hash::{Address, ChainId, Hash256, Word};
use crate::protocol::build_move2;
use crate::sim::engine::{Driver, Engine, SimError};
use crate::sim::metrics::{GasAccumulator, GasRow};
use crate::sim::shard::shard_of;
use crate::time::SimTime;
use crate::vm::{code_hash_of, derive_address, Transaction, TxKind, Value};
use crate::workload::dag::{build_dag, DependencyDag};
use crate::workload::trace::{ObjectId, TraceOp, TraceTx};

/// Deploys the game contracts and sends promotional mints and births.
pub const GAME: Address = Address([0x9a; 20]);

#[derive(Clone, Debug)]
pub struct ReplayConfig {
    pub chains: Vec<ChainConfig>,
    pub max_outstanding: usize,
    pub header_delay: SimTime,
    /// Simulated time after which an unfinished replay is an error.
    pub horizon: SimTime,
}

impl ReplayConfig {
    pub fn burrow(n_shards: u32) -> Self {
        ReplayConfig {
            chains: (0..n_shards).map(|i| ChainConfig::burrow_like(ChainId(i))).collect(),
            max_outstanding: 250,
            header_delay: SimTime::ZERO,
            horizon: SimTime::from_secs(1_000_000),
        }
    }
}

/// Chain-independent view of one cat: addresses are replaced by object ids.
/// Kitten genes depend on block seeds and are left out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatState {
    pub owner: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promo_genes: Option<String>,
    pub parents: Option<(ObjectId, ObjectId)>,
    pub pregnant_with: Option<ObjectId>,
    pub sire_approved: Option<ObjectId>,
    pub births: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emitted {
    pub trace_id: u64,
    /// `call`, `move1` or `move2`.
    pub kind: String,
    pub chain: u32,
    pub time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub n_shards: u32,
    pub txs: usize,
    /// Move1/Move2 pairs inserted for breeding pairs on different shards.
    pub moves_inserted: u64,
    pub cross_shard_txs: u64,
    pub cross_shard_rate: f64,
    pub max_outstanding: usize,
    pub max_outstanding_seen: usize,
    pub sim_seconds: f64,
    pub gas_table: Vec<GasRow>,
    pub final_state: BTreeMap<ObjectId, CatState>,
    pub emitted: Vec<Emitted>,
}

#[derive(Clone, Copy, Debug)]
enum Stage {
    Main,
    Move1 { cat: ObjectId, dst: ChainId },
    Move2 { cat: ObjectId, dst: ChainId },
}

/// Move1 inclusion height, trace id and cat of a move waiting for finality,
/// keyed by (target, source) chain.
type PendingMove = (u64, u64, ObjectId);

#[derive(Clone, Copy, Debug)]
enum Next {
    Move2 { id: u64, cat: ObjectId, src: ChainId, dst: ChainId },
    Main(u64),
}

struct Replayer {
    dag: DependencyDag,
    cap: usize,
    cores: Vec<Address>,
    objects: BTreeMap<ObjectId, (Address, ChainId)>,
    seqs: BTreeMap<Address, u64>,
    in_flight: HashMap<Hash256, (u64, Stage)>,
    outstanding: usize,
    max_seen: usize,
    started: BTreeSet<u64>,
    next: VecDeque<Next>,
    waiting: BTreeMap<(u32, u32), Vec<PendingMove>>,
    moves: u64,
    cross: u64,
    gas: GasAccumulator,
    emitted: Vec<Emitted>,
}

impl Replayer {
    fn n_shards(&self) -> u32 {
        self.cores.len() as u32
    }

    fn submit(&mut self, eng: &mut Engine, id: u64, stage: Stage, chain: ChainId, mut tx: Transaction) -> Result<(), SimError> {
        let seq = self.seqs.entry(tx.sender).or_default();
        tx.seq = *seq;
        *seq += 1;
        let h = eng.submit(chain, tx)?;
        self.in_flight.insert(h, (id, stage));
        self.outstanding += 1;
        self.max_seen = self.max_seen.max(self.outstanding);
        let kind = match stage {
            Stage::Main => "call",
            Stage::Move1 { .. } => "move1",
            Stage::Move2 { .. } => "move2",
        };
        self.emitted.push(Emitted {
            trace_id: id,
            kind: kind.into(),
            chain: chain.0,
            time_ms: eng.now().millis(),
        });
        Ok(())
    }

    fn cat(&self, o: ObjectId) -> Result<(Address, ChainId), SimError> {
        self.objects
            .get(&o)
            .copied()
            .ok_or_else(|| SimError::Workload(format!("object {o} not yet created")))
    }

    fn owner_of(eng: &Engine, addr: Address, chain: ChainId) -> Result<Address, SimError> {
        eng.chain(chain)
            .view(addr, "owner", &[])
            .ok()
            .and_then(|v| v.first().and_then(Value::as_addr))
            .ok_or_else(|| SimError::Workload(format!("cannot read owner of {addr}")))
    }

    fn references_ready(&self, tx: &TraceTx) -> bool {
        tx.op.references().iter().all(|o| self.objects.contains_key(o))
    }

    /// Submits the business call of trace transaction `id`, or the Move1
    /// of its sire when the breeding pair is split.
    fn start(&mut self, eng: &mut Engine, id: u64) -> Result<(), SimError> {
        let tx = self.dag.tx(id).expect("known").clone();
        match tx.op {
            TraceOp::PromoCat { owner, genes } => {
                let chain = ChainId(shard_of(&owner, self.n_shards()));
                let call = Transaction::call(
                    GAME,
                    0,
                    self.cores[chain.0 as usize],
                    "create_promo_cat",
                    vec![Value::Addr(owner), Value::Word(genes)],
                );
                self.submit(eng, id, Stage::Main, chain, call)
            }
            TraceOp::ApproveSiring { sire, dam } => {
                let (s, chain) = self.cat(sire)?;
                let (d, _) = self.cat(dam)?;
                let owner = Self::owner_of(eng, s, chain)?;
                let call = Transaction::call(owner, 0, s, "approve_siring", vec![Value::Addr(d)]);
                self.submit(eng, id, Stage::Main, chain, call)
            }
            TraceOp::Breed { dam, sire } => {
                let (_, cd) = self.cat(dam)?;
                let (s, cs) = self.cat(sire)?;
                if cd != cs {
                    self.cross += 1;
                    self.moves += 1;
                    let owner = Self::owner_of(eng, s, cs)?;
                    let m1 = Transaction::move1(owner, 0, s, cd);
                    return self.submit(eng, id, Stage::Move1 { cat: sire, dst: cd }, cs, m1);
                }
                self.main_breed(eng, id, dam, sire)
            }
            TraceOp::GiveBirth { dam } => {
                let (d, chain) = self.cat(dam)?;
                let call = Transaction::call(GAME, 0, d, "give_birth", vec![]);
                self.submit(eng, id, Stage::Main, chain, call)
            }
        }
    }

    fn main_breed(&mut self, eng: &mut Engine, id: u64, dam: ObjectId, sire: ObjectId) -> Result<(), SimError> {
        let (d, chain) = self.cat(dam)?;
        let (s, _) = self.cat(sire)?;
        let owner = Self::owner_of(eng, d, chain)?;
        let call = Transaction::call(owner, 0, d, "breed", vec![Value::Addr(s)]);
        self.submit(eng, id, Stage::Main, chain, call)
    }

    fn pump(&mut self, eng: &mut Engine) -> Result<(), SimError> {
        while self.outstanding < self.cap {
            let Some(n) = self.next.pop_front() else { break };
            match n {
                Next::Move2 { id, cat, src, dst } => {
                    let (addr, _) = self.cat(cat)?;
                    let payload = build_move2(eng.chain(src), &addr)?;
                    self.submit(eng, id, Stage::Move2 { cat, dst }, dst, Transaction::move2(GAME, 0, payload))?;
                }
                Next::Main(id) => match self.dag.tx(id).expect("known").op {
                    TraceOp::Breed { dam, sire } => self.main_breed(eng, id, dam, sire)?,
                    _ => unreachable!("only breeds resume"),
                },
            }
        }
        if self.outstanding >= self.cap {
            return Ok(());
        }
        for id in self.dag.leaves() {
            if self.outstanding >= self.cap {
                break;
            }
            if self.started.contains(&id) {
                continue;
            }
            let tx = self.dag.tx(id).expect("known");
            if !self.references_ready(tx) {
                continue;
            }
            self.started.insert(id);
            self.start(eng, id)?;
        }
        Ok(())
    }
}

impl Driver for Replayer {
    fn start(&mut self, eng: &mut Engine) -> Result<(), SimError> {
        self.pump(eng)
    }

    fn on_block(&mut self, eng: &mut Engine, chain: ChainId, block: &ProducedBlock) -> Result<(), SimError> {
        for r in &block.receipts {
            let Some((id, stage)) = self.in_flight.remove(&r.tx_hash) else {
                continue;
            };
            self.outstanding -= 1;
            let op = self.dag.tx(id).expect("known").op.name();
            let label = match r.kind {
                TxKind::Move1 => "move1",
                TxKind::Move2 => "move2",
                _ => op,
            };
            self.gas.add(label, r);
            if let Some(reason) = r.status.abort_reason() {
                return Err(SimError::Workload(format!(
                    "trace tx {id} ({op}, {label}) aborted on chain {chain}: {reason}"
                )));
            }
            match stage {
                Stage::Main => {
                    let tx = self.dag.tx(id).expect("known").clone();
                    if let Some(obj) = tx.produces.first() {
                        let addr = r
                            .output
                            .first()
                            .and_then(Value::as_addr)
                            .ok_or_else(|| SimError::Workload(format!("trace tx {id} returned no cat")))?;
                        self.objects.insert(*obj, (addr, chain));
                    }
                    self.dag
                        .complete(id)
                        .map_err(|e| SimError::Workload(e.to_string()))?;
                }
                Stage::Move1 { cat, dst } => {
                    self.waiting
                        .entry((dst.0, chain.0))
                        .or_default()
                        .push((r.included_height, id, cat));
                }
                Stage::Move2 { cat, dst } => {
                    self.objects.get_mut(&cat).expect("known cat").1 = dst;
                    self.next.push_back(Next::Main(id));
                }
            }
        }
        self.pump(eng)?;
        if self.dag.is_drained() && self.outstanding == 0 {
            eng.stop();
        } else if self.outstanding == 0 && self.next.is_empty() && self.waiting.values().all(Vec::is_empty) {
            return Err(SimError::Workload(format!(
                "replay stalled with {} transactions left",
                self.dag.remaining()
            )));
        }
        Ok(())
    }

    fn on_header(&mut self, eng: &mut Engine, at: ChainId, header: &BlockHeader) -> Result<(), SimError> {
        let Some(list) = self.waiting.get_mut(&(at.0, header.chain.0)) else {
            return Ok(());
        };
        let registry = eng.chain(at).registry();
        let (ready, rest): (Vec<_>, Vec<_>) = list
            .drain(..)
            .partition(|(h, _, _)| registry.is_final(header.chain, *h));
        *list = rest;
        for (_, id, cat) in ready {
            self.next.push_back(Next::Move2 {
                id,
                cat,
                src: header.chain,
                dst: at,
            });
        }
        self.pump(eng)
    }
}

fn word_hex(w: &Word) -> String {
    hex::encode(w)
}

fn project(eng: &Engine, objects: &BTreeMap<ObjectId, (Address, ChainId)>) -> Result<BTreeMap<ObjectId, CatState>, SimError> {
    let by_addr: BTreeMap<Address, ObjectId> = objects.iter().map(|(o, (a, _))| (*a, *o)).collect();
    let id_of = |a: Address| -> Option<ObjectId> {
        if a == Address::ZERO {
            None
        } else {
            by_addr.get(&a).copied()
        }
    };
    let mut out = BTreeMap::new();
    for (o, (addr, chain)) in objects {
        let c = eng.chain(*chain);
        let get = |m: &str| -> Result<Vec<Value>, SimError> {
            c.view(*addr, m, &[])
                .map_err(|e| SimError::Workload(format!("view {m} on cat {o}: {e}")))
        };
        let owner = get("owner")?[0].as_addr().unwrap_or(Address::ZERO);
        let parents = get("parents")?;
        let pa = parents[0].as_addr().unwrap_or(Address::ZERO);
        let pb = parents[1].as_addr().unwrap_or(Address::ZERO);
        let genes = get("genes")?[0].as_word().unwrap_or([0; 32]);
        let promo = pa == Address::ZERO;
        out.insert(
            *o,
            CatState {
                owner,
                promo_genes: promo.then(|| word_hex(&genes)),
                parents: match (id_of(pa), id_of(pb)) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                },
                pregnant_with: id_of(get("pregnant_with")?[0].as_addr().unwrap_or(Address::ZERO)),
                sire_approved: id_of(get("sire_approved")?[0].as_addr().unwrap_or(Address::ZERO)),
                births: get("births")?[0].as_u128().unwrap_or(0),
            },
        );
    }
    Ok(out)
}

/// Replays `trace` and returns its statistics and final projected state.
pub fn replay(trace: &[TraceTx], cfg: &ReplayConfig) -> Result<ReplayStats, SimError> {
    if cfg.max_outstanding == 0 {
        return Err(SimError::Config("max_outstanding must be >= 1".into()));
    }
    let dag = build_dag(trace).map_err(|e| SimError::Workload(e.to_string()))?;
    let mut eng = Engine::new(&cfg.chains, Arc::new(standard_registry()), cfg.header_delay)?;
    let salt = [0u8; 32];
    let mut cores = Vec::new();
    for c in &cfg.chains {
        let create = Transaction::create(GAME, 0, code_hash_of(KITTY_CORE), salt, vec![]);
        eng.chain_mut(c.id).genesis_execute(create)?;
        cores.push(derive_address(c.id, &GAME, &salt, &code_hash_of(KITTY_CORE)));
    }
    eng.seal_all()?;
    let mut r = Replayer {
        dag,
        cap: cfg.max_outstanding,
        cores,
        objects: BTreeMap::new(),
        seqs: BTreeMap::new(),
        in_flight: HashMap::new(),
        outstanding: 0,
        max_seen: 0,
        started: BTreeSet::new(),
        next: VecDeque::new(),
        waiting: BTreeMap::new(),
        moves: 0,
        cross: 0,
        gas: GasAccumulator::default(),
        emitted: Vec::new(),
    };
    // the game's genesis create used seq 0
    r.seqs.insert(GAME, 1);
    if !r.dag.is_drained() {
        eng.run(&mut r, cfg.horizon)?;
    }
    if !r.dag.is_drained() {
        return Err(SimError::Workload(format!(
            "replay unfinished at the horizon with {} transactions left",
            r.dag.remaining()
        )));
    }
    let final_state = project(&eng, &r.objects)?;
    Ok(ReplayStats {
        n_shards: cfg.chains.len() as u32,
        txs: trace.len(),
        moves_inserted: r.moves,
        cross_shard_txs: r.cross,
        cross_shard_rate: if trace.is_empty() {
            0.0
        } else {
            r.cross as f64 / trace.len() as f64
        },
        max_outstanding: cfg.max_outstanding,
        max_outstanding_seen: r.max_seen,
        sim_seconds: eng.now().as_secs_f64(),
        gas_table: r.gas.table(crate::sim::metrics::DEFAULT_GAS_PRICE_GWEI, crate::sim::metrics::DEFAULT_TOKEN_USD),
        final_state,
        emitted: r.emitted,
    })
}
