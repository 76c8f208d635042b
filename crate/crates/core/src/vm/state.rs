use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::hash::{Address, Hash256};
use crate::merkle;
use crate::protocol::NonceWatermark;
use crate::vm::types::ContractRecord;

/// A contract record together with its cached commitments.
#[derive(Clone, Debug)]
pub struct CommittedContract {
    pub record: ContractRecord,
    pub storage_root: Hash256,
    pub leaf_hash: Hash256,
}

impl CommittedContract {
    pub fn new(record: ContractRecord) -> Self {
        let storage_root = record.storage_root();
        let leaf_hash = merkle::leaf_hash(&record.leaf_bytes(&storage_root));
        CommittedContract {
            record,
            storage_root,
            leaf_hash,
        }
    }
}

/// Native balance and transaction counter of a client identity on one chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClientAccount {
    pub balance: u128,
    /// Executed transactions sent by this client. Not committed in the
    /// state root.
    pub seq: u64,
}

/// Changes produced by one successful transaction.
#[derive(Clone, Debug, Default)]
pub struct StateDelta {
    pub contracts: BTreeMap<Address, ContractRecord>,
    pub balances: BTreeMap<Address, u128>,
}

/// Account leaf preimage: `address ‖ balance`.
pub fn account_leaf(address: &Address, balance: u128) -> Vec<u8> {
    let mut v = Vec::with_capacity(36);
    v.extend_from_slice(address.as_bytes());
    v.extend_from_slice(&balance.to_be_bytes());
    v
}

/// State of one chain: contract records (active and stale) and client accounts.
///
/// The state root is `inner_hash(contracts_root, accounts_root)`, where the
/// contract tree holds one leaf per record in address order and the account
/// tree one leaf per client with a non-zero history.
#[derive(Clone, Debug, Default)]
pub struct WorldState {
    contracts: BTreeMap<Address, Arc<CommittedContract>>,
    accounts: BTreeMap<Address, ClientAccount>,
    code_refs: BTreeMap<Hash256, usize>,
    watermarks: NonceWatermark,
    /// `(contracts_root, accounts_root)`, cleared on every write.
    roots: Cell<Option<(Hash256, Hash256)>>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contract(&self, address: &Address) -> Option<&ContractRecord> {
        self.contracts.get(address).map(|c| &c.record)
    }

    pub fn committed(&self, address: &Address) -> Option<&Arc<CommittedContract>> {
        self.contracts.get(address)
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractRecord> {
        self.contracts.values().map(|c| &c.record)
    }

    pub fn contract_count(&self) -> usize {
        self.contracts.len()
    }

    pub fn account(&self, address: &Address) -> ClientAccount {
        self.accounts.get(address).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Address, &ClientAccount)> {
        self.accounts.iter()
    }

    pub fn has_code(&self, code_hash: &Hash256) -> bool {
        self.code_refs.contains_key(code_hash)
    }

    pub fn watermarks(&self) -> &NonceWatermark {
        &self.watermarks
    }

    pub fn set_balance(&mut self, address: Address, balance: u128) {
        self.roots.set(None);
        self.accounts.entry(address).or_default().balance = balance;
    }

    pub fn bump_seq(&mut self, address: Address) {
        self.accounts.entry(address).or_default().seq += 1;
    }

    /// Inserts or replaces a record.
    pub fn put_contract(&mut self, record: ContractRecord) {
        let address = record.address;
        self.roots.set(None);
        self.watermarks.observe(address, record.nonce);
        let code_hash = record.code_hash;
        let previous = self
            .contracts
            .insert(address, Arc::new(CommittedContract::new(record)));
        match previous {
            Some(old) if old.record.code_hash == code_hash => {}
            Some(old) => {
                self.release_code(&old.record.code_hash);
                *self.code_refs.entry(code_hash).or_default() += 1;
            }
            None => *self.code_refs.entry(code_hash).or_default() += 1,
        }
    }

    fn release_code(&mut self, code_hash: &Hash256) {
        if let Some(n) = self.code_refs.get_mut(code_hash) {
            *n -= 1;
            if *n == 0 {
                self.code_refs.remove(code_hash);
            }
        }
    }

    pub fn apply(&mut self, delta: StateDelta) {
        for (_, record) in delta.contracts {
            self.put_contract(record);
        }
        for (address, balance) in delta.balances {
            self.set_balance(address, balance);
        }
    }

    pub fn contracts_root(&self) -> Hash256 {
        let leaves: Vec<Hash256> = self.contracts.values().map(|c| c.leaf_hash).collect();
        merkle::root_from_hashes(&leaves)
    }

    pub fn accounts_root(&self) -> Hash256 {
        let leaves: Vec<Hash256> = self
            .accounts
            .iter()
            .map(|(a, acc)| merkle::leaf_hash(&account_leaf(a, acc.balance)))
            .collect();
        merkle::root_from_hashes(&leaves)
    }

    fn roots(&self) -> (Hash256, Hash256) {
        if let Some(r) = self.roots.get() {
            return r;
        }
        let r = (self.contracts_root(), self.accounts_root());
        self.roots.set(Some(r));
        r
    }

    pub fn state_root(&self) -> Hash256 {
        let (c, a) = self.roots();
        merkle::inner_hash(&c, &a)
    }

    /// Immutable view of the committed state at `height`.
    pub fn snapshot(&self, height: u64) -> StateSnapshot {
        let (contracts_root, accounts_root) = self.roots();
        StateSnapshot {
            height,
            contracts: self.contracts.clone(),
            contracts_root,
            accounts_root,
            state_root: merkle::inner_hash(&contracts_root, &accounts_root),
        }
    }
}

/// Committed contract set at one height, enough to prove any record.
#[derive(Clone, Debug)]
pub struct StateSnapshot {
    pub height: u64,
    pub contracts: BTreeMap<Address, Arc<CommittedContract>>,
    pub contracts_root: Hash256,
    pub accounts_root: Hash256,
    pub state_root: Hash256,
}
