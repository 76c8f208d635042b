//! Synthetic kitties traces.
//!
//! The op mix imitates a collectible-cat game: promotional mints, breeding
//! mostly between cats of the same owner, occasional breeding with another
//! owner's sire after an approval, and births. A genealogy oracle keeps
//! every breeding legal so that each transaction succeeds on replay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hash::Address;
use crate::workload::trace::{ObjectId, TraceOp, TraceTx};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub n_txs: usize,
    pub owners: usize,
    /// Probability that a step mints a promotional cat.
    pub promo_fraction: f64,
    /// Probability that a step delivers a pending birth, when one exists.
    pub birth_fraction: f64,
    /// Probability that a breeding uses another owner's sire, preceded by an
    /// approval.
    pub approval_fraction: f64,
    pub seed: u64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            n_txs: 1000,
            owners: 120,
            promo_fraction: 0.2,
            birth_fraction: 0.35,
            approval_fraction: 0.2,
            seed: 1,
        }
    }
}

pub fn owner_address(k: usize) -> Address {
    Address::client(1_000_000 + k as u64)
}

#[derive(Clone, Debug)]
struct CatInfo {
    id: ObjectId,
    owner: usize,
    parents: Option<(ObjectId, ObjectId)>,
    pregnant: bool,
}

fn forbidden(a: &CatInfo, b: &CatInfo) -> bool {
    if a.id == b.id {
        return true;
    }
    if let (Some((p, q)), Some((r, s))) = (a.parents, b.parents) {
        if p == r || p == s || q == r || q == s {
            return true;
        }
    }
    let child_of = |x: &CatInfo, y: &CatInfo| x.parents.is_some_and(|(p, q)| p == y.id || q == y.id);
    child_of(a, b) || child_of(b, a)
}

struct Gen {
    rng: ChaCha8Rng,
    cats: Vec<CatInfo>,
    /// Pregnant dams (index into `cats`) with their sire's object id.
    pending: Vec<(usize, ObjectId)>,
    out: Vec<TraceTx>,
    next_obj: ObjectId,
    owners: usize,
    approval: f64,
}

impl Gen {
    fn push(&mut self, op: TraceOp, produces: Vec<ObjectId>, consumes: Vec<ObjectId>) {
        let id = self.out.len() as u64 + 1;
        self.out.push(TraceTx {
            id,
            op,
            produces,
            consumes,
        });
    }

    fn promo(&mut self) {
        let owner = self.rng.random_range(0..self.owners);
        let genes: [u8; 32] = self.rng.random();
        let id = self.next_obj;
        self.next_obj += 1;
        self.cats.push(CatInfo {
            id,
            owner,
            parents: None,
            pregnant: false,
        });
        self.push(
            TraceOp::PromoCat {
                owner: owner_address(owner),
                genes,
            },
            vec![id],
            vec![],
        );
    }

    /// Sire for `dam`, or `None` when no legal one turned up.
    fn pick_sire(&mut self, dam: usize, other_owner: bool) -> Option<usize> {
        let owner = self.cats[dam].owner;
        for _ in 0..32 {
            let s = self.rng.random_range(0..self.cats.len());
            if (self.cats[s].owner != owner) != other_owner {
                continue;
            }
            if !forbidden(&self.cats[dam], &self.cats[s]) {
                return Some(s);
            }
        }
        None
    }

    fn breed(&mut self, room: usize) -> bool {
        let open: Vec<usize> = (0..self.cats.len()).filter(|&i| !self.cats[i].pregnant).collect();
        if open.is_empty() {
            return false;
        }
        let dam = open[self.rng.random_range(0..open.len())];
        let want_other = room >= 2 && self.rng.random_bool(self.approval);
        let Some(sire) = self.pick_sire(dam, want_other) else {
            return false;
        };
        let (d, s) = (self.cats[dam].id, self.cats[sire].id);
        if want_other {
            self.push(TraceOp::ApproveSiring { sire: s, dam: d }, vec![], vec![s]);
        }
        self.push(TraceOp::Breed { dam: d, sire: s }, vec![], vec![d, s]);
        self.cats[dam].pregnant = true;
        self.pending.push((dam, s));
        true
    }

    fn birth(&mut self) {
        let k = self.rng.random_range(0..self.pending.len());
        let (dam, sire) = self.pending.swap_remove(k);
        let child = self.next_obj;
        self.next_obj += 1;
        let d = self.cats[dam].id;
        self.cats[dam].pregnant = false;
        self.cats.push(CatInfo {
            id: child,
            owner: self.cats[dam].owner,
            parents: Some((d, sire)),
            pregnant: false,
        });
        self.push(TraceOp::GiveBirth { dam: d }, vec![child], vec![d]);
    }
}

/// Generates a legal trace with exactly `params.n_txs` transactions.
pub fn generate(params: &TraceParams) -> Vec<TraceTx> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        cats: Vec::new(),
        pending: Vec::new(),
        out: Vec::new(),
        next_obj: 1,
        owners: params.owners.max(1),
        approval: params.approval_fraction,
    };
    while g.out.len() < params.n_txs {
        let room = params.n_txs - g.out.len();
        let r: f64 = g.rng.random();
        if g.cats.len() < 2 || r < params.promo_fraction {
            g.promo();
        } else if !g.pending.is_empty() && g.rng.random_bool(params.birth_fraction) {
            g.birth();
        } else if !g.breed(room) {
            g.promo();
        }
    }
    g.out
}
