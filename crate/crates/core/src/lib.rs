//! Simulator of smart contracts that move between blockchains.
//!
//! Chains share one contract machine. A contract is active on exactly one
//! chain at a time and moves with a two-transaction protocol: a lock on the
//! source and a Merkle-proved recreation on the target. On top of that the
//! crate ships the bundled applications, workload generators and a
//! deterministic discrete-event harness for sharding and cross-chain
//! experiments.

pub mod apps;
pub mod chain;
pub mod codec;
pub mod hash;
pub mod merkle;
pub mod protocol;
pub mod script;
pub mod serde_words;
pub mod sim;
pub mod state_proof;
pub mod time;
pub mod vm;
pub mod workload;

pub use chain::{BlockHeader, Chain, ChainConfig, ChainError, HeaderRegistry, Network};
pub use hash::{Address, ChainId, Hash256, Word};
pub use protocol::{build_move2, check_move2, Move2Payload, MoveError, NonceWatermark};
pub use state_proof::{prove_contract, verify_contract_proof, ContractProof};
pub use time::SimTime;
pub use vm::{AbortReason, GasMode, GasSchedule, Receipt, Status, Transaction, Value};
pub use sim::{run, shard_of, ExperimentConfig, MetricsReport};
