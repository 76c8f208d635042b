//! Deterministic experiment harness: event loop, shard routing, metrics and
//! the experiment drivers.

pub mod config;
pub mod engine;
pub mod ibc;
pub mod metrics;
pub mod shard;
pub mod sharding;

pub use config::{ClientConfig, ClientMode, ExperimentConfig, WorkloadConfig};
pub use engine::{Driver, Engine, SimError};
pub use metrics::{cdf, export, gas_report, usd, ExportFormat, MetricsReport, TxClass};
pub use shard::shard_of;
pub use sharding::run;
