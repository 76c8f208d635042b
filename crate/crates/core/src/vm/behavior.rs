use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::hash::{hash_parts, ChainId, Hash256};
use crate::vm::exec::Ctx;
use crate::vm::types::{AbortReason, Value};

pub type CallResult = Result<Vec<Value>, AbortReason>;

/// Native contract code. Every chain dispatches calls for contracts whose
/// `code_hash` maps to this behavior.
///
/// Behaviors must be deterministic functions of the context they are given.
pub trait Behavior: Send + Sync {
    fn name(&self) -> &str;

    /// Size of the code in bytes, used for code-deposit gas.
    fn code_size(&self) -> usize;

    fn construct(&self, _ctx: &mut Ctx<'_>, _args: &[Value]) -> Result<(), AbortReason> {
        Ok(())
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult;

    /// Read-only methods may be called on contracts that moved away.
    fn is_view(&self, _method: &str) -> bool {
        false
    }

    /// Runs on the source chain before the contract is locked.
    fn move_to(&self, _ctx: &mut Ctx<'_>, _target: ChainId, _args: &[Value]) -> Result<(), AbortReason> {
        Ok(())
    }

    /// Runs on the target chain after the storage is recreated.
    fn move_finish(&self, _ctx: &mut Ctx<'_>) -> Result<(), AbortReason> {
        Ok(())
    }
}

/// Code hash under which a behavior name is registered by default.
pub fn code_hash_of(name: &str) -> Hash256 {
    hash_parts(&[b"code:", name.as_bytes()])
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("code hash {0} already registered")]
    Duplicate(Hash256),
}

/// Code shared by all chains of a simulation.
#[derive(Default, Clone)]
pub struct BehaviorRegistry {
    behaviors: BTreeMap<Hash256, Arc<dyn Behavior>>,
}

impl BehaviorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_behavior(
        &mut self,
        code_hash: Hash256,
        behavior: Arc<dyn Behavior>,
    ) -> Result<Hash256, RegistryError> {
        if self.behaviors.contains_key(&code_hash) {
            return Err(RegistryError::Duplicate(code_hash));
        }
        self.behaviors.insert(code_hash, behavior);
        Ok(code_hash)
    }

    /// Registers under [`code_hash_of`] the behavior's name.
    pub fn register(&mut self, behavior: Arc<dyn Behavior>) -> Result<Hash256, RegistryError> {
        let h = code_hash_of(behavior.name());
        self.register_behavior(h, behavior)
    }

    pub fn get(&self, code_hash: &Hash256) -> Option<&dyn Behavior> {
        self.behaviors.get(code_hash).map(|b| b.as_ref())
    }

    pub fn code_size(&self, code_hash: &Hash256) -> Option<usize> {
        self.get(code_hash).map(|b| b.code_size())
    }

    pub fn len(&self) -> usize {
        self.behaviors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviors.is_empty()
    }
}
