//! Oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use chainmove::apps::scoin::{AccountRef, TOKEN};
use chainmove::apps::standard_registry;
use chainmove::protocol::relay::RELAY_FACTORY;
use chainmove::script::Script;
use chainmove::vm::ContractRecord;
use chainmove::{
    build_move2, AbortReason, Address, ChainConfig, ChainId, Hash256, Move2Payload, MoveError, Network, Receipt,
    Transaction, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

// ---------------------------------------------------------------------------
// Merkle

fn sha(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Root recomputed level by level straight from the hashing rules.
pub fn brute_root(items: &[Vec<u8>]) -> [u8; 32] {
    let mut level: Vec<[u8; 32]> = items.iter().map(|i| sha(&[&[0u8], i])).collect();
    assert!(!level.is_empty());
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|c| if c.len() == 2 { sha(&[&[1u8], &c[0], &c[1]]) } else { c[0] })
            .collect();
    }
    level[0]
}

// ---------------------------------------------------------------------------
// Conservation fuzz

const N_CHAINS: u32 = 3;
const CLIENTS: usize = 4;
const ACCOUNTS: usize = 8;
const NATIVE: u128 = 10_000;
const INITIAL_TOKENS: u128 = 1_000;
const ADMIN: Address = Address([0xad; 20]);
const RELAYER: Address = Address([0x22; 20]);

pub fn fuzz_client(k: usize) -> Address {
    Address::client(500 + k as u64)
}

#[derive(Clone, Debug)]
struct Movable {
    address: Address,
    loc: ChainId,
    flight: Option<ChainId>,
}

#[derive(Clone, Debug)]
struct RelayModel {
    m: Movable,
    origin: ChainId,
    locked: u128,
    issued: u128,
    beneficiary: Address,
}

/// Global ledger the chains are compared against after every step.
#[derive(Default)]
struct Ledger {
    accounts: Vec<Movable>,
    account_refs: Vec<AccountRef>,
    owners: Vec<Address>,
    tokens: Vec<u128>,
    supply: u128,
    native: BTreeMap<(u32, Address), u128>,
    relays: Vec<RelayModel>,
    /// Addresses with exactly one active record at all times.
    fixed: Vec<(Address, ChainId)>,
}

#[derive(Clone, Debug, Default)]
pub struct FuzzReport {
    pub ops: usize,
    pub counts: BTreeMap<&'static str, usize>,
    pub aborts_expected: usize,
    pub checks: usize,
    pub relays: usize,
    /// Hash over every receipt status and the final state roots.
    pub digest: String,
}

struct Fuzz {
    s: Script,
    rng: ChaCha8Rng,
    l: Ledger,
    factories: Vec<Address>,
    token: Address,
    used_payloads: Vec<Move2Payload>,
    digest: Sha256,
    report: FuzzReport,
}

fn status(r: &Receipt) -> Option<&AbortReason> {
    r.status.abort_reason()
}

fn chains() -> impl Iterator<Item = ChainId> {
    (0..N_CHAINS).map(ChainId)
}

impl Fuzz {
    fn new(seed: u64) -> Result<Self, String> {
        let cfgs: Vec<_> = chains().map(ChainConfig::burrow_like).collect();
        let mut net = Network::new(&cfgs, Arc::new(standard_registry())).map_err(|e| e.to_string())?;
        let mut l = Ledger::default();
        for c in chains() {
            for k in 0..CLIENTS {
                net.chain_mut(c).genesis_fund(fuzz_client(k), NATIVE).map_err(|e| e.to_string())?;
                l.native.insert((c.0, fuzz_client(k)), NATIVE);
            }
        }
        net.seal_all().map_err(|e| e.to_string())?;
        let mut s = Script::from_network(net);
        let c0 = ChainId(0);
        let (token, _) = s.create(c0, ADMIN, TOKEN, [0; 32], vec![]).map_err(|e| e.to_string())?;
        l.fixed.push((token, c0));
        for i in 0..ACCOUNTS {
            let owner = fuzz_client(i % CLIENTS);
            let tx = Transaction::call(
                ADMIN,
                0,
                token,
                "new_account_for",
                vec![Value::Addr(owner), Value::U128(INITIAL_TOKENS)],
            );
            let r = s.send_ok(c0, tx, "new_account_for").map_err(|e| e.to_string())?;
            let address = r.output[0].as_addr().ok_or("no account address")?;
            let salt = match r.output[1] {
                Value::Word(w) => w,
                _ => return Err("no salt".into()),
            };
            l.account_refs.push(AccountRef {
                address,
                salt,
                origin: c0,
            });
            l.accounts.push(Movable {
                address,
                loc: c0,
                flight: None,
            });
            l.owners.push(owner);
            l.tokens.push(INITIAL_TOKENS);
            l.supply += INITIAL_TOKENS;
        }
        let mut factories = Vec::new();
        for c in chains() {
            let (f, _) = s.create(c, ADMIN, RELAY_FACTORY, [0; 32], vec![]).map_err(|e| e.to_string())?;
            l.fixed.push((f, c));
            factories.push(f);
        }
        Ok(Fuzz {
            s,
            rng: ChaCha8Rng::seed_from_u64(seed),
            l,
            factories,
            token,
            used_payloads: Vec::new(),
            digest: Sha256::new(),
            report: FuzzReport::default(),
        })
    }

    fn send(&mut self, chain: ChainId, tx: Transaction) -> Result<Receipt, String> {
        let r = self.s.send(chain, tx).map_err(|e| e.to_string())?;
        self.digest.update(format!("{}:{:?};", chain.0, r.status).as_bytes());
        Ok(r)
    }

    fn other_chain(&mut self, not: ChainId) -> ChainId {
        let k = self.rng.random_range(1..N_CHAINS);
        ChainId((not.0 + k) % N_CHAINS)
    }

    fn expect(&mut self, what: &str, r: &Receipt, ok: bool) -> Result<(), String> {
        match (ok, status(r)) {
            (true, None) => Ok(()),
            (false, Some(_)) => {
                self.report.aborts_expected += 1;
                Ok(())
            }
            (true, Some(reason)) => Err(format!("{what}: expected success, got {reason:?}")),
            (false, None) => Err(format!("{what}: expected abort, got success")),
        }
    }

    fn transfer(&mut self) -> Result<&'static str, String> {
        let idle: Vec<usize> = (0..ACCOUNTS).filter(|&i| self.l.accounts[i].flight.is_none()).collect();
        if idle.is_empty() {
            return Ok("skip");
        }
        let a = idle[self.rng.random_range(0..idle.len())];
        let b = (a + self.rng.random_range(1..ACCOUNTS)) % ACCOUNTS;
        let amount = self.rng.random_range(0..=self.l.tokens[a] + 50);
        let here = self.l.accounts[a].loc;
        let dest = &self.l.accounts[b];
        let ok = dest.flight.is_none() && dest.loc == here && amount <= self.l.tokens[a];
        let tx = Transaction::call(
            self.l.owners[a],
            0,
            self.l.accounts[a].address,
            "transfer",
            self.l.account_refs[b].transfer_args(amount),
        );
        let r = self.send(here, tx)?;
        self.expect("transfer", &r, ok)?;
        if ok {
            self.l.tokens[a] -= amount;
            self.l.tokens[b] += amount;
        }
        Ok("transfer")
    }

    fn move1(&mut self) -> Result<&'static str, String> {
        let n_relays = self.l.relays.len();
        let pick = self.rng.random_range(0..ACCOUNTS + n_relays);
        let (m, signer) = if pick < ACCOUNTS {
            (self.l.accounts[pick].clone(), self.l.owners[pick])
        } else {
            let r = &self.l.relays[pick - ACCOUNTS];
            (r.m.clone(), r.beneficiary)
        };
        if m.flight.is_some() {
            return Ok("skip");
        }
        let to = self.other_chain(m.loc);
        let r = self.send(m.loc, Transaction::move1(signer, 0, m.address, to))?;
        self.expect("move1", &r, true)?;
        self.movable_mut(pick).flight = Some(to);
        Ok("move1")
    }

    fn movable_mut(&mut self, pick: usize) -> &mut Movable {
        if pick < ACCOUNTS {
            &mut self.l.accounts[pick]
        } else {
            &mut self.l.relays[pick - ACCOUNTS].m
        }
    }

    fn move2(&mut self) -> Result<&'static str, String> {
        let flying: Vec<usize> = (0..ACCOUNTS + self.l.relays.len())
            .filter(|&i| {
                if i < ACCOUNTS {
                    self.l.accounts[i].flight.is_some()
                } else {
                    self.l.relays[i - ACCOUNTS].m.flight.is_some()
                }
            })
            .collect();
        if flying.is_empty() {
            return Ok("skip");
        }
        let pick = flying[self.rng.random_range(0..flying.len())];
        let m = self.movable_mut(pick).clone();
        let dst = m.flight.expect("in flight");
        let payload = loop {
            match build_move2(self.s.net.chain(m.loc), &m.address) {
                Ok(p) => break p,
                Err(MoveError::NotFinal { .. }) => self.s.net.advance_blocks(m.loc, 1).map_err(|e| e.to_string())?,
                Err(e) => return Err(format!("build_move2: {e}")),
            }
        };
        let r = self.send(dst, Transaction::move2(RELAYER, 0, payload.clone()))?;
        self.expect("move2", &r, true)?;
        self.used_payloads.push(payload);
        let mm = self.movable_mut(pick);
        mm.loc = dst;
        mm.flight = None;
        Ok("move2")
    }

    fn stale_move2(&mut self) -> Result<&'static str, String> {
        if self.used_payloads.is_empty() {
            return Ok("skip");
        }
        let p = self.used_payloads[self.rng.random_range(0..self.used_payloads.len())].clone();
        let r = self.send(p.target, Transaction::move2(RELAYER, 0, p))?;
        self.expect("stale move2", &r, false)?;
        Ok("stale_move2")
    }

    fn relay_create(&mut self) -> Result<&'static str, String> {
        let k = self.rng.random_range(0..CLIENTS);
        let client = fuzz_client(k);
        let x = ChainId(self.rng.random_range(0..N_CHAINS));
        let have = self.l.native[&(x.0, client)];
        if have == 0 {
            return Ok("skip");
        }
        let amount = self.rng.random_range(1..=have.min(200));
        let y = self.other_chain(x);
        let tx = Transaction::call(client, 0, self.factories[x.0 as usize], "create", vec![
            Value::Addr(client),
            Value::Chain(y),
        ])
        .with_value(amount);
        let r = self.send(x, tx)?;
        self.expect("relay create", &r, true)?;
        let address = r.output[0].as_addr().ok_or("no relay address")?;
        *self.l.native.get_mut(&(x.0, client)).unwrap() -= amount;
        self.l.relays.push(RelayModel {
            m: Movable {
                address,
                loc: x,
                flight: Some(y),
            },
            origin: x,
            locked: amount,
            issued: 0,
            beneficiary: client,
        });
        Ok("relay_create")
    }

    fn relay_mint(&mut self) -> Result<&'static str, String> {
        let idle: Vec<usize> = (0..self.l.relays.len()).filter(|&i| self.l.relays[i].m.flight.is_none()).collect();
        if idle.is_empty() {
            return Ok("skip");
        }
        let i = idle[self.rng.random_range(0..idle.len())];
        let rm = self.l.relays[i].clone();
        // Minting is allowed once, away from the origin chain.
        let want = if rm.m.loc == rm.origin {
            Some(AbortReason::Rejected("mint only away from origin".into()))
        } else if rm.issued > 0 {
            Some(AbortReason::AlreadyMinted)
        } else {
            None
        };
        let r = self.send(rm.m.loc, Transaction::call(rm.beneficiary, 0, rm.m.address, "mint", vec![]))?;
        if status(&r) != want.as_ref() {
            return Err(format!("relay mint: expected {want:?}, got {:?}", status(&r)));
        }
        match want {
            None => self.l.relays[i].issued = rm.locked,
            Some(_) => self.report.aborts_expected += 1,
        }
        Ok("relay_mint")
    }

    fn step(&mut self) -> Result<(), String> {
        let roll = self.rng.random_range(0..100);
        let name = match roll {
            0..=39 => self.transfer()?,
            40..=57 => self.move1()?,
            58..=79 => self.move2()?,
            80..=84 => self.stale_move2()?,
            85..=91 => self.relay_create()?,
            _ => self.relay_mint()?,
        };
        *self.report.counts.entry(name).or_default() += 1;
        Ok(())
    }

    /// Every record of every chain, grouped by address.
    fn records(&self) -> BTreeMap<Address, Vec<(ChainId, &ContractRecord)>> {
        let mut out: BTreeMap<Address, Vec<(ChainId, &ContractRecord)>> = BTreeMap::new();
        for c in chains() {
            for r in self.s.net.chain(c).state().contracts() {
                out.entry(r.address).or_default().push((c, r));
            }
        }
        out
    }

    fn view_u128(&self, chain: ChainId, target: Address, method: &str) -> Result<u128, String> {
        match self.s.net.chain(chain).view(target, method, &[]) {
            Ok(v) => match v.first() {
                Some(Value::U128(x)) => Ok(*x),
                other => Err(format!("{method} returned {other:?}")),
            },
            Err(e) => Err(format!("{method} on {target}: {e:?}")),
        }
    }

    fn check(&mut self) -> Result<(), String> {
        self.report.checks += 1;
        let records = self.records();

        // Exactly one active record per contract, except while in flight.
        let mut expected_active: BTreeMap<Address, Option<ChainId>> = BTreeMap::new();
        for (a, c) in &self.l.fixed {
            expected_active.insert(*a, Some(*c));
        }
        for m in self.l.accounts.iter().chain(self.l.relays.iter().map(|r| &r.m)) {
            expected_active.insert(m.address, if m.flight.is_some() { None } else { Some(m.loc) });
        }
        if expected_active.len() != records.len() {
            return Err(format!("{} contracts on chain, {} in the ledger", records.len(), expected_active.len()));
        }
        let mut newest: BTreeMap<Address, (ChainId, &ContractRecord)> = BTreeMap::new();
        for (addr, recs) in &records {
            let active: Vec<ChainId> = recs.iter().filter(|(c, r)| r.is_active_on(*c)).map(|(c, _)| *c).collect();
            let want = expected_active.get(addr).ok_or(format!("unknown contract {addr}"))?;
            match (want, active.as_slice()) {
                (Some(c), [got]) if c == got => {}
                (None, []) => {}
                _ => return Err(format!("{addr}: active on {active:?}, ledger says {want:?}")),
            }
            let top = recs.iter().max_by_key(|(_, r)| r.nonce).unwrap();
            if recs.iter().filter(|(_, r)| r.nonce == top.1.nonce).count() != 1 {
                return Err(format!("{addr}: two records share the newest nonce {}", top.1.nonce));
            }
            newest.insert(*addr, *top);
        }

        // Tokens.
        let mut sum = 0;
        for (i, m) in self.l.accounts.iter().enumerate() {
            let (c, _) = newest[&m.address];
            let bal = self.view_u128(c, m.address, "balance")?;
            if bal != self.l.tokens[i] {
                return Err(format!("account {i}: balance {bal}, ledger {}", self.l.tokens[i]));
            }
            sum += bal;
        }
        let supply = self.view_u128(ChainId(0), self.token, "total_supply")?;
        if sum != supply || supply != self.l.supply {
            return Err(format!("token sum {sum}, supply {supply}, ledger {}", self.l.supply));
        }
        for r in &self.l.relays {
            let (c, _) = newest[&r.m.address];
            let issued = self.view_u128(c, r.m.address, "issued")?;
            if issued != r.issued {
                return Err(format!("relay {}: issued {issued}, ledger {}", r.m.address, r.issued));
            }
        }

        // Currency: per origin chain, client balances plus value held by
        // contracts of that origin stay constant.
        for c in chains() {
            let mut native = 0;
            for (a, acc) in self.s.net.chain(c).state().accounts() {
                let want = self.l.native.get(&(c.0, *a)).copied().unwrap_or(0);
                if acc.balance != want {
                    return Err(format!("chain {}: client {a} has {}, ledger {want}", c.0, acc.balance));
                }
                native += acc.balance;
            }
            let locked: u128 = newest.values().filter(|(_, r)| r.origin == c).map(|(_, r)| r.balance).sum();
            let ledger_locked: u128 = self.l.relays.iter().filter(|r| r.origin == c).map(|r| r.locked).sum();
            if locked != ledger_locked || native + locked != NATIVE * CLIENTS as u128 {
                return Err(format!("chain {}: native {native} + locked {locked} (ledger {ledger_locked})", c.0));
            }
        }
        Ok(())
    }

    fn finish(mut self) -> FuzzReport {
        for c in chains() {
            self.digest.update(self.s.net.chain(c).head().state_root.as_bytes());
        }
        self.report.relays = self.l.relays.len();
        self.report.digest = hex::encode(self.digest.finalize());
        self.report
    }
}

/// Runs `ops` random operations over three chains, checking every invariant
/// against the ledger after each one.
pub fn conservation_fuzz(seed: u64, ops: usize) -> Result<FuzzReport, String> {
    let mut f = Fuzz::new(seed)?;
    f.check().map_err(|e| format!("after setup: {e}"))?;
    for i in 0..ops {
        f.step().map_err(|e| format!("op {i}: {e}"))?;
        f.check().map_err(|e| format!("after op {i}: {e}"))?;
        f.report.ops += 1;
    }
    Ok(f.finish())
}

pub fn hash_hex(h: &Hash256) -> String {
    hex::encode(h.as_bytes())
}
