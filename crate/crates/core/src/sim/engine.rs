//! Discrete-event loop over a set of chains.
//!
//! Events fire in `(time, chain, sequence)` order. Block events produce a
//! block, deliver its header to every other chain (inline when the header
//! delay is zero, as a timed event otherwise) and hand the receipts to the
//! driver. Wake events are driver timers; they sort after every chain at the
//! same instant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use thiserror::Error;

use crate::chain::{BlockHeader, Chain, ChainConfig, ChainError, ProducedBlock};
use crate::hash::{ChainId, Hash256};
use crate::protocol::MoveError;
use crate::time::SimTime;
use crate::vm::{BehaviorRegistry, Transaction};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error("workload: {0}")]
    Workload(String),
}

const WAKE_CHAIN: u32 = u32::MAX;

#[derive(Clone, Debug)]
enum Kind {
    Block,
    Deliver(Box<BlockHeader>),
    Wake(u64),
}

#[derive(Debug)]
struct Scheduled {
    time: SimTime,
    chain: u32,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.chain, other.seq).cmp(&(self.time, self.chain, self.seq))
    }
}

/// Callbacks of a workload running on the engine.
pub trait Driver {
    /// Called once before the first event, at time zero.
    fn start(&mut self, eng: &mut Engine) -> Result<(), SimError>;

    fn on_block(&mut self, eng: &mut Engine, chain: ChainId, block: &ProducedBlock) -> Result<(), SimError>;

    /// `header` was just received by chain `at`.
    fn on_header(&mut self, _eng: &mut Engine, _at: ChainId, _header: &BlockHeader) -> Result<(), SimError> {
        Ok(())
    }

    fn on_wake(&mut self, _eng: &mut Engine, _token: u64) -> Result<(), SimError> {
        Ok(())
    }
}

pub struct Engine {
    chains: Vec<Chain>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: SimTime,
    header_delay: SimTime,
    events: u64,
    stopped: bool,
}

impl Engine {
    /// Chains must have ids `0..n` in order. Every chain tracks every other
    /// as a peer.
    pub fn new(configs: &[ChainConfig], code: Arc<BehaviorRegistry>, header_delay: SimTime) -> Result<Self, SimError> {
        if configs.is_empty() {
            return Err(SimError::Config("at least one chain required".into()));
        }
        let mut chains = Vec::with_capacity(configs.len());
        for (i, cfg) in configs.iter().enumerate() {
            if cfg.id.0 as usize != i {
                return Err(SimError::Config(format!("chain ids must be 0..n in order, got {} at {i}", cfg.id)));
            }
            let mut c = Chain::new(*cfg, code.clone())?;
            for peer in configs.iter().filter(|p| p.id != cfg.id) {
                c.registry_mut().add_peer(peer.id, peer.p);
            }
            chains.push(c);
        }
        Ok(Engine {
            chains,
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            header_delay,
            events: 0,
            stopped: false,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
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

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Events processed so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    /// Seals every genesis and exchanges the genesis headers.
    pub fn seal_all(&mut self) -> Result<(), SimError> {
        let mut headers = Vec::new();
        for c in &mut self.chains {
            headers.push(c.seal_genesis()?);
        }
        for h in &headers {
            for c in self.chains.iter_mut().filter(|c| c.id() != h.chain) {
                c.receive_header(h.clone())?;
            }
        }
        Ok(())
    }

    /// Queues `tx` on `chain`, arriving now.
    pub fn submit(&mut self, chain: ChainId, tx: Transaction) -> Result<Hash256, SimError> {
        let now = self.now;
        Ok(self.chain_mut(chain).submit_tx(tx, now)?)
    }

    /// Ends the current `run` after the event being processed.
    pub fn stop(&mut self) {
        self.stopped = true;
    }

    pub fn wake_at(&mut self, time: SimTime, token: u64) {
        let time = time.max(self.now);
        self.push(time, WAKE_CHAIN, Kind::Wake(token));
    }

    fn push(&mut self, time: SimTime, chain: u32, kind: Kind) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            chain,
            seq: self.seq,
            kind,
        });
    }

    /// Runs `driver` until every event at or before `until` has fired or the
    /// driver calls [`Engine::stop`]. A later call resumes where this one
    /// stopped; `start` is only called on the first.
    pub fn run<D: Driver>(&mut self, driver: &mut D, until: SimTime) -> Result<(), SimError> {
        let first = self.queue.is_empty();
        if first {
            for i in 0..self.chains.len() {
                let due = self.chains[i].next_block_due();
                self.push(due, i as u32, Kind::Block);
            }
        }
        self.stopped = false;
        if first {
            driver.start(self)?;
        }
        while let Some(top) = self.queue.peek() {
            if self.stopped || top.time > until {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            self.events += 1;
            match ev.kind {
                Kind::Block => {
                    let id = ChainId(ev.chain);
                    let block = self.chain_mut(id).produce_block(ev.time)?;
                    let next = self.chain(id).next_block_due();
                    self.push(next, ev.chain, Kind::Block);
                    for j in 0..self.chains.len() as u32 {
                        if j == ev.chain {
                            continue;
                        }
                        if self.header_delay == SimTime::ZERO {
                            self.deliver(driver, ChainId(j), block.header.clone())?;
                        } else {
                            let at = ev.time + self.header_delay;
                            self.push(at, j, Kind::Deliver(Box::new(block.header.clone())));
                        }
                    }
                    driver.on_block(self, id, &block)?;
                }
                Kind::Deliver(h) => self.deliver(driver, ChainId(ev.chain), *h)?,
                Kind::Wake(token) => driver.on_wake(self, token)?,
            }
        }
        Ok(())
    }

    fn deliver<D: Driver>(&mut self, driver: &mut D, at: ChainId, header: BlockHeader) -> Result<(), SimError> {
        self.chain_mut(at).receive_header(header.clone())?;
        driver.on_header(self, at, &header)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::standard_registry;

    #[derive(Default)]
    struct Recorder {
        seen: Vec<(u64, u32, &'static str)>,
    }

    impl Driver for Recorder {
        fn start(&mut self, eng: &mut Engine) -> Result<(), SimError> {
            eng.wake_at(SimTime::from_secs(15), 7);
            Ok(())
        }

        fn on_block(&mut self, eng: &mut Engine, chain: ChainId, _b: &ProducedBlock) -> Result<(), SimError> {
            self.seen.push((eng.now().millis(), chain.0, "block"));
            Ok(())
        }

        fn on_header(&mut self, eng: &mut Engine, at: ChainId, _h: &BlockHeader) -> Result<(), SimError> {
            self.seen.push((eng.now().millis(), at.0, "header"));
            Ok(())
        }

        fn on_wake(&mut self, eng: &mut Engine, _t: u64) -> Result<(), SimError> {
            self.seen.push((eng.now().millis(), WAKE_CHAIN, "wake"));
            Ok(())
        }
    }

    fn engine(delay: u64) -> Engine {
        let cfgs = [ChainConfig::burrow_like(ChainId(0)), ChainConfig::ethereum_like(ChainId(1))];
        let mut e = Engine::new(&cfgs, Arc::new(standard_registry()), SimTime(delay)).unwrap();
        e.seal_all().unwrap();
        e
    }

    #[test]
    fn events_in_time_chain_order() {
        let mut e = engine(0);
        let mut r = Recorder::default();
        e.run(&mut r, SimTime::from_secs(15)).unwrap();
        let blocks: Vec<_> = r.seen.iter().filter(|s| s.2 == "block").map(|s| (s.0, s.1)).collect();
        assert_eq!(blocks, vec![(5000, 0), (10000, 0), (15000, 0), (15000, 1)]);
        // the wake at 15 s fires after both chains
        assert_eq!(r.seen.last().unwrap().2, "wake");
        // header of chain 1's block reaches chain 0 before on_block
        let i = r.seen.iter().position(|s| *s == (15000, 0, "header")).unwrap();
        assert_eq!(r.seen[i + 1], (15000, 1, "block"));
    }

    #[test]
    fn delayed_headers_arrive_later() {
        let mut e = engine(700);
        let mut r = Recorder::default();
        e.run(&mut r, SimTime::from_secs(6)).unwrap();
        assert!(r.seen.contains(&(5700, 1, "header")));
        assert_eq!(e.chain(ChainId(1)).registry().head_height(ChainId(0)), Some(1));
    }

    #[test]
    fn zero_horizon_fires_nothing() {
        let mut e = engine(0);
        let mut r = Recorder::default();
        e.run(&mut r, SimTime::ZERO).unwrap();
        assert!(r.seen.is_empty());
        assert_eq!(e.events(), 0);
    }
}
