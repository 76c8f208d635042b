//! Contract machine shared by every simulated chain.
//!
//! Contracts are native [`Behavior`] implementations keyed by code hash.
//! Each record carries a location field naming the chain where it is active;
//! state-changing calls anywhere else abort with `ContractMoved`.

pub mod behavior;
pub mod exec;
pub mod state;
pub mod types;

pub use behavior::{code_hash_of, Behavior, BehaviorRegistry, CallResult, RegistryError};
pub use exec::{derive_address, execute_tx, view, BlockEnv, Ctx, Execution};
pub use state::{ClientAccount, CommittedContract, StateDelta, StateSnapshot, WorldState};
pub use types::{
    storage_root, AbortReason, Call, ContractRecord, Event, GasMode, GasSchedule, Receipt, Status,
    Transaction, TxBody, TxKind, Value, DEFAULT_GAS_LIMIT,
};
