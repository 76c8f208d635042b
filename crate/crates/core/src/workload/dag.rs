//! Dependency DAG over trace transactions.
//!
//! A transaction depends on the previous transaction that touched (produced
//! or consumed) each object it consumes. Edges therefore always point to
//! earlier trace entries and the graph is acyclic by construction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::workload::trace::{ObjectId, TraceTx};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DagError {
    #[error("transaction {tx} consumes unknown object {object}")]
    UnknownObject { tx: u64, object: ObjectId },
    #[error("duplicate transaction id {0}")]
    DuplicateId(u64),
    #[error("unknown transaction {0}")]
    UnknownTx(u64),
    #[error("transaction {0} is not a leaf")]
    NotLeaf(u64),
}

#[derive(Clone, Debug)]
pub struct DependencyDag {
    txs: Vec<TraceTx>,
    index: BTreeMap<u64, usize>,
    deps: Vec<BTreeSet<usize>>,
    children: Vec<Vec<usize>>,
    unmet: Vec<usize>,
    executed: Vec<bool>,
    leaves: BTreeSet<usize>,
    done: usize,
}

pub fn build_dag(trace: &[TraceTx]) -> Result<DependencyDag, DagError> {
    let n = trace.len();
    let mut index = BTreeMap::new();
    let mut last: BTreeMap<ObjectId, usize> = BTreeMap::new();
    let mut deps = vec![BTreeSet::new(); n];
    let mut children = vec![Vec::new(); n];
    for (i, tx) in trace.iter().enumerate() {
        if index.insert(tx.id, i).is_some() {
            return Err(DagError::DuplicateId(tx.id));
        }
        for o in &tx.consumes {
            let j = *last.get(o).ok_or(DagError::UnknownObject { tx: tx.id, object: *o })?;
            if deps[i].insert(j) {
                children[j].push(i);
            }
        }
        for o in tx.consumes.iter().chain(&tx.produces) {
            last.insert(*o, i);
        }
    }
    let unmet: Vec<usize> = deps.iter().map(|d| d.len()).collect();
    let leaves = (0..n).filter(|&i| unmet[i] == 0).collect();
    Ok(DependencyDag {
        txs: trace.to_vec(),
        index,
        deps,
        children,
        unmet,
        executed: vec![false; n],
        leaves,
        done: 0,
    })
}

impl DependencyDag {
    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn tx(&self, id: u64) -> Option<&TraceTx> {
        self.index.get(&id).map(|&i| &self.txs[i])
    }

    /// Current leaves in trace order: unexecuted transactions whose
    /// dependencies have all executed.
    pub fn leaves(&self) -> Vec<u64> {
        self.leaves.iter().map(|&i| self.txs[i].id).collect()
    }

    pub fn is_leaf(&self, id: u64) -> bool {
        self.index.get(&id).is_some_and(|i| self.leaves.contains(i))
    }

    /// Ids of the transactions `id` depends on.
    pub fn dependencies(&self, id: u64) -> Result<Vec<u64>, DagError> {
        let i = *self.index.get(&id).ok_or(DagError::UnknownTx(id))?;
        Ok(self.deps[i].iter().map(|&j| self.txs[j].id).collect())
    }

    pub fn edge_count(&self) -> usize {
        self.deps.iter().map(|d| d.len()).sum()
    }

    /// Marks leaf `id` executed and returns the transactions that became
    /// leaves.
    pub fn complete(&mut self, id: u64) -> Result<Vec<u64>, DagError> {
        let i = *self.index.get(&id).ok_or(DagError::UnknownTx(id))?;
        if !self.leaves.remove(&i) {
            return Err(DagError::NotLeaf(id));
        }
        self.executed[i] = true;
        self.done += 1;
        let mut fresh = Vec::new();
        for &c in &self.children[i] {
            self.unmet[c] -= 1;
            if self.unmet[c] == 0 {
                self.leaves.insert(c);
                fresh.push(self.txs[c].id);
            }
        }
        Ok(fresh)
    }

    pub fn executed(&self, id: u64) -> bool {
        self.index.get(&id).is_some_and(|&i| self.executed[i])
    }

    pub fn remaining(&self) -> usize {
        self.txs.len() - self.done
    }

    pub fn is_drained(&self) -> bool {
        self.done == self.txs.len()
    }
}
