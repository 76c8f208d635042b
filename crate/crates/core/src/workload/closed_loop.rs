//! Closed-loop SCoin clients.
//!
//! Every client owns one account and transfers one token at a time to a
//! randomly picked account, submitting the next transfer only once the
//! previous one has completed. A cross-shard transfer first moves the
//! sender's account to the destination's shard (Move1, finality wait, Move2)
//! and then transfers there.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apps::scoin::{account_address, AccountRef, ACCOUNT, TOKEN};
use crate::apps::standard_registry;
use crate::apps::store::slot;
use crate::chain::{BlockHeader, ChainConfig, ProducedBlock};
use crate::hash::{word_from_u128, word_to_u128, Address, ChainId, Hash256};
use crate::protocol::build_move2;
use crate::sim::config::{ClientConfig, ClientMode};
use crate::sim::engine::{Driver, Engine, SimError};
use crate::sim::metrics::{GasAccumulator, LatencySample, ThroughputPoint, TxClass};
use crate::sim::shard::shard_of;
use crate::time::SimTime;
use crate::vm::{code_hash_of, derive_address, AbortReason, Receipt, Transaction, TxKind, Value};

pub const ADMIN: Address = Address([0xad; 20]);
pub const INITIAL_BALANCE: u128 = 1_000_000_000;

/// Chains with a deployed token and one funded account per client, each
/// account placed on the shard its address hashes to.
pub struct ScoinWorld {
    pub engine: Engine,
    pub token: Address,
    /// Client `i` owns `accounts[i]`.
    pub accounts: Vec<AccountRef>,
    pub owners: Vec<Address>,
    /// Accounts minted only to reach the next address of a short shard.
    pub filler: usize,
}

pub fn client_address(i: usize) -> Address {
    Address::client(i as u64)
}

impl ScoinWorld {
    /// The token lives on chain 0. Accounts are minted there in salt order
    /// and relocated in genesis to `shard_of(address)`.
    pub fn build(configs: &[ChainConfig], clients_per_shard: usize, header_delay: SimTime) -> Result<Self, SimError> {
        let n = configs.len() as u32;
        let mut engine = Engine::new(configs, Arc::new(standard_registry()), header_delay)?;
        let c0 = ChainId(0);
        let salt = [0u8; 32];
        let mut seq = 0;
        let mut next_seq = || {
            seq += 1;
            seq
        };
        engine
            .chain_mut(c0)
            .genesis_execute(Transaction::create(ADMIN, next_seq(), code_hash_of(TOKEN), salt, vec![]))?;
        let token = derive_address(c0, &ADMIN, &salt, &code_hash_of(TOKEN));

        let mut need = vec![clients_per_shard; n as usize];
        let mut placed: Vec<(AccountRef, Address, u32)> = Vec::new();
        let mut filler = 0;
        let mut salt_n: u128 = 0;
        while need.iter().any(|&k| k > 0) {
            let addr = account_address(c0, &token, salt_n);
            let s = shard_of(&addr, n);
            let (owner, initial) = if need[s as usize] > 0 {
                need[s as usize] -= 1;
                (client_address(placed.len()), INITIAL_BALANCE)
            } else {
                filler += 1;
                (ADMIN, 0)
            };
            let tx = Transaction::call(
                ADMIN,
                next_seq(),
                token,
                "new_account_for",
                vec![Value::Addr(owner), Value::U128(initial)],
            );
            engine.chain_mut(c0).genesis_execute(tx)?;
            if initial > 0 {
                let r = AccountRef {
                    address: addr,
                    salt: word_from_u128(salt_n),
                    origin: c0,
                };
                placed.push((r, owner, s));
            }
            salt_n += 1;
        }
        for (r, _, s) in &placed {
            if *s != 0 {
                let rec = engine.chain_mut(c0).genesis_relocate(r.address, ChainId(*s))?;
                engine.chain_mut(ChainId(*s)).genesis_import(rec)?;
            }
        }
        engine.seal_all()?;
        Ok(ScoinWorld {
            engine,
            token,
            accounts: placed.iter().map(|p| p.0).collect(),
            owners: placed.iter().map(|p| p.1).collect(),
            filler,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    Transfer,
    Move1,
    Finality,
    Move2,
    Sleeping,
}

#[derive(Clone, Debug)]
struct Job {
    cross: bool,
    dest: Option<usize>,
    started: Option<SimTime>,
    moved: bool,
    retries: u32,
}

#[derive(Clone, Debug)]
struct Client {
    seq: u64,
    phase: Phase,
    job: Option<Job>,
}

/// What a closed-loop run measured.
#[derive(Clone, Debug, Default)]
pub struct ClosedLoopStats {
    pub latency_samples: Vec<LatencySample>,
    pub retry_histogram: BTreeMap<u32, u64>,
    pub completed: u64,
    pub cross_shard_count: u64,
    pub moves: u64,
    pub aborts: BTreeMap<String, u64>,
    pub gas: GasAccumulator,
    /// `(bucket index, chain)` → completed transfers.
    pub buckets: BTreeMap<(u64, u32), u64>,
}

impl ClosedLoopStats {
    pub fn throughput_series(&self, interval_secs: u64, duration_secs: u64, n_chains: u32) -> Vec<ThroughputPoint> {
        let n_buckets = duration_secs / interval_secs;
        let mut out = Vec::new();
        for b in 0..n_buckets {
            let t = ((b + 1) * interval_secs) as f64;
            let mut total = 0;
            for c in 0..n_chains {
                let k = self.buckets.get(&(b, c)).copied().unwrap_or(0);
                total += k;
                out.push(ThroughputPoint {
                    t,
                    shard: Some(c),
                    tps: k as f64 / interval_secs as f64,
                });
            }
            out.push(ThroughputPoint {
                t,
                shard: None,
                tps: total as f64 / interval_secs as f64,
            });
        }
        out
    }
}

pub struct ClosedLoop {
    cfg: ClientConfig,
    series_interval: SimTime,
    rng: ChaCha8Rng,
    accounts: Vec<AccountRef>,
    owners: Vec<Address>,
    /// Location each client believes an account has; updated when a Move1
    /// commits.
    loc: Vec<ChainId>,
    moving: Vec<bool>,
    pins: Vec<u32>,
    clients: Vec<Client>,
    pending: HashMap<Hash256, usize>,
    /// `(destination, source)` → clients waiting for the source height to
    /// become final at the destination.
    waiting: BTreeMap<(u32, u32), Vec<(u64, usize)>>,
    move_target: Vec<ChainId>,
    stats: ClosedLoopStats,
}

impl ClosedLoop {
    pub fn new(world: &ScoinWorld, cfg: ClientConfig, seed: u64, series_interval: SimTime) -> Self {
        let n = world.accounts.len();
        let n_chains = world.engine.n_chains() as u32;
        let loc = world
            .accounts
            .iter()
            .map(|a| ChainId(shard_of(&a.address, n_chains)))
            .collect();
        ClosedLoop {
            cfg,
            series_interval,
            rng: ChaCha8Rng::seed_from_u64(seed),
            accounts: world.accounts.clone(),
            owners: world.owners.clone(),
            loc,
            moving: vec![false; n],
            pins: vec![0; n],
            clients: vec![
                Client {
                    seq: 0,
                    phase: Phase::Idle,
                    job: None,
                };
                n
            ],
            pending: HashMap::new(),
            waiting: BTreeMap::new(),
            move_target: vec![ChainId(0); n],
            stats: ClosedLoopStats::default(),
        }
    }

    pub fn stats(&self) -> &ClosedLoopStats {
        &self.stats
    }

    pub fn into_stats(self) -> ClosedLoopStats {
        self.stats
    }

    fn oracle(&self) -> bool {
        self.cfg.mode == ClientMode::OracleNoConflict
    }

    fn send(&mut self, eng: &mut Engine, c: usize, chain: ChainId, mut tx: Transaction) -> Result<(), SimError> {
        tx.seq = self.clients[c].seq;
        self.clients[c].seq += 1;
        let h = eng.submit(chain, tx)?;
        self.pending.insert(h, c);
        let now = eng.now();
        let job = self.clients[c].job.as_mut().expect("active job");
        job.started.get_or_insert(now);
        Ok(())
    }

    fn sleep_blocks(&mut self, eng: &mut Engine, c: usize, blocks: u32) {
        self.clients[c].phase = Phase::Sleeping;
        let dt = eng.chain(self.loc[c]).config().block_interval.millis() * blocks as u64;
        eng.wake_at(eng.now() + SimTime(dt), c as u64);
    }

    fn begin(&mut self, eng: &mut Engine, c: usize) -> Result<(), SimError> {
        let cross = eng.n_chains() > 1 && self.rng.random_bool(self.cfg.cross_shard_rate);
        self.clients[c].job = Some(Job {
            cross,
            dest: None,
            started: None,
            moved: false,
            retries: 0,
        });
        self.act(eng, c)
    }

    /// Picks an account at random; `None` when no eligible account turned up.
    fn pick(&mut self, c: usize, cross: bool) -> Option<usize> {
        let n = self.accounts.len();
        let here = self.loc[c];
        let tries = 64 * self.loc.iter().max().map(|m| m.0 as usize + 1).unwrap_or(1);
        for _ in 0..tries {
            let d = self.rng.random_range(0..n);
            if d == c || (self.loc[d] != here) != cross {
                continue;
            }
            if self.oracle() && self.moving[d] {
                continue;
            }
            return Some(d);
        }
        None
    }

    fn act(&mut self, eng: &mut Engine, c: usize) -> Result<(), SimError> {
        let job = self.clients[c].job.clone().expect("active job");
        let dest = match job.dest {
            Some(d) => d,
            None => {
                if self.oracle() && job.cross && self.pins[c] > 0 {
                    self.sleep_blocks(eng, c, 1);
                    return Ok(());
                }
                match self.pick(c, job.cross) {
                    Some(d) => {
                        if self.oracle() {
                            self.pins[d] += 1;
                        }
                        self.clients[c].job.as_mut().unwrap().dest = Some(d);
                        d
                    }
                    None => {
                        self.sleep_blocks(eng, c, 1);
                        return Ok(());
                    }
                }
            }
        };
        let here = self.loc[c];
        let there = self.loc[dest];
        if here == there {
            self.submit_transfer(eng, c, dest)
        } else {
            if self.oracle() {
                self.moving[c] = true;
            }
            self.move_target[c] = there;
            self.clients[c].phase = Phase::Move1;
            let tx = Transaction::move1(self.owners[c], 0, self.accounts[c].address, there);
            self.send(eng, c, here, tx)
        }
    }

    fn submit_transfer(&mut self, eng: &mut Engine, c: usize, dest: usize) -> Result<(), SimError> {
        self.clients[c].phase = Phase::Transfer;
        let tx = Transaction::call(
            self.owners[c],
            0,
            self.accounts[c].address,
            "transfer",
            self.accounts[dest].transfer_args(1),
        );
        let here = self.loc[c];
        self.send(eng, c, here, tx)
    }

    fn release_pin(&mut self, c: usize) {
        if !self.oracle() {
            return;
        }
        if let Some(d) = self.clients[c].job.as_ref().and_then(|j| j.dest) {
            self.pins[d] -= 1;
        }
    }

    fn complete(&mut self, eng: &mut Engine, c: usize, chain: ChainId) -> Result<(), SimError> {
        let now = eng.now();
        self.release_pin(c);
        let job = self.clients[c].job.take().expect("active job");
        let class = if job.moved {
            TxClass::CrossShard
        } else {
            TxClass::SingleShard
        };
        self.stats.latency_samples.push(LatencySample {
            class,
            seconds: (now - job.started.expect("submitted")).as_secs_f64(),
            retries: job.retries,
        });
        *self.stats.retry_histogram.entry(job.retries).or_default() += 1;
        self.stats.completed += 1;
        if job.moved {
            self.stats.cross_shard_count += 1;
        }
        let bucket = (now.millis().saturating_sub(1)) / self.series_interval.millis();
        *self.stats.buckets.entry((bucket, chain.0)).or_default() += 1;
        self.clients[c].phase = Phase::Idle;
        self.begin(eng, c)
    }

    fn abort(&mut self, eng: &mut Engine, c: usize, reason: &AbortReason) -> Result<(), SimError> {
        *self.stats.aborts.entry(reason.to_string()).or_default() += 1;
        let transient = matches!(reason, AbortReason::ContractMoved | AbortReason::NoSuchContract);
        if transient && !self.oracle() {
            self.clients[c].job.as_mut().unwrap().retries += 1;
            let k = self.rng.random_range(0..=self.cfg.retry_backoff_blocks);
            self.sleep_blocks(eng, c, k);
            return Ok(());
        }
        // permanent failure: drop the job
        self.release_pin(c);
        self.moving[c] = false;
        self.clients[c].job = None;
        self.clients[c].phase = Phase::Idle;
        self.begin(eng, c)
    }

    fn on_receipt(&mut self, eng: &mut Engine, chain: ChainId, r: &Receipt) -> Result<(), SimError> {
        let Some(c) = self.pending.remove(&r.tx_hash) else {
            return Ok(());
        };
        let op = match r.kind {
            TxKind::Move1 => "move1",
            TxKind::Move2 => "move2",
            _ => "transfer",
        };
        self.stats.gas.add(op, r);
        if let Some(reason) = r.status.abort_reason() {
            return self.abort(eng, c, reason);
        }
        match self.clients[c].phase {
            Phase::Transfer => self.complete(eng, c, chain),
            Phase::Move1 => {
                let dst = self.move_target[c];
                self.loc[c] = dst;
                self.clients[c].phase = Phase::Finality;
                self.waiting
                    .entry((dst.0, chain.0))
                    .or_default()
                    .push((r.included_height, c));
                Ok(())
            }
            Phase::Move2 => {
                self.moving[c] = false;
                self.stats.moves += 1;
                let job = self.clients[c].job.as_mut().unwrap();
                job.moved = true;
                let dest = job.dest.expect("destination chosen");
                self.submit_transfer(eng, c, dest)
            }
            p => Err(SimError::Workload(format!("receipt for client {c} in phase {p:?}"))),
        }
    }
}

impl Driver for ClosedLoop {
    fn start(&mut self, eng: &mut Engine) -> Result<(), SimError> {
        for c in 0..self.clients.len() {
            self.begin(eng, c)?;
        }
        Ok(())
    }

    fn on_block(&mut self, eng: &mut Engine, chain: ChainId, block: &ProducedBlock) -> Result<(), SimError> {
        for r in &block.receipts {
            self.on_receipt(eng, chain, r)?;
        }
        Ok(())
    }

    fn on_header(&mut self, eng: &mut Engine, at: ChainId, header: &BlockHeader) -> Result<(), SimError> {
        let key = (at.0, header.chain.0);
        let Some(list) = self.waiting.get_mut(&key) else {
            return Ok(());
        };
        let registry = eng.chain(at).registry();
        let (ready, rest): (Vec<_>, Vec<_>) = list
            .drain(..)
            .partition(|(h, _)| registry.is_final(header.chain, *h));
        *list = rest;
        for (_, c) in ready {
            let payload = build_move2(eng.chain(header.chain), &self.accounts[c].address)?;
            self.clients[c].phase = Phase::Move2;
            let tx = Transaction::move2(self.owners[c], 0, payload);
            self.send(eng, c, at, tx)?;
        }
        Ok(())
    }

    fn on_wake(&mut self, eng: &mut Engine, token: u64) -> Result<(), SimError> {
        let c = token as usize;
        if self.clients[c].phase == Phase::Sleeping {
            self.act(eng, c)?;
        }
        Ok(())
    }
}

/// Checks token conservation and that no account is active on two chains.
pub fn check_scoin(eng: &Engine, token: &Address) -> Vec<String> {
    let mut violations = Vec::new();
    let account_code = code_hash_of(ACCOUNT);
    let mut latest: BTreeMap<Address, (u64, u128)> = BTreeMap::new();
    let mut active: BTreeMap<Address, u32> = BTreeMap::new();
    for chain in eng.chains() {
        for rec in chain.state().contracts() {
            if rec.code_hash != account_code {
                continue;
            }
            if rec.is_active_on(chain.id()) {
                *active.entry(rec.address).or_default() += 1;
            }
            let bal = rec
                .storage
                .get(&slot("balance"))
                .map(word_to_u128)
                .unwrap_or(0);
            let e = latest.entry(rec.address).or_insert((rec.nonce, bal));
            if rec.nonce > e.0 {
                *e = (rec.nonce, bal);
            }
        }
    }
    for (a, k) in &active {
        if *k > 1 {
            violations.push(format!("account {a} active on {k} chains"));
        }
    }
    let held: u128 = latest.values().map(|v| v.1).sum();
    let supply = eng
        .chain(ChainId(0))
        .view(*token, "total_supply", &[])
        .ok()
        .and_then(|v| v.first().and_then(Value::as_u128))
        .unwrap_or(0);
    if held != supply {
        violations.push(format!("token supply {supply} but accounts hold {held}"));
    }
    violations
}
