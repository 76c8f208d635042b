//! Experiment configuration, read from TOML.
//!
//! ```toml
//! n_shards = 4
//! duration_secs = 300
//! seed = 7
//! gas_price_gwei = 2.0
//! token_usd = 144.0
//! header_delay_ms = 0
//! series_interval_secs = 10
//!
//! [workload]
//! app = "scoin"
//! clients_per_shard = 250
//! cross_shard_rate = 0.1
//! mode = "ORACLE_NO_CONFLICT"
//! ```
//!
//! `chains` may list explicit chain configs (`id`, `block_interval` in ms,
//! `p`, `gas_mode`, ...). When omitted, `n_shards` Burrow-like chains are
//! used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::hash::ChainId;
use crate::sim::engine::SimError;
use crate::sim::metrics::{DEFAULT_GAS_PRICE_GWEI, DEFAULT_TOKEN_USD};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClientMode {
    /// Clients know every contract location and never target a contract
    /// that is moving or about to move.
    OracleNoConflict,
    /// Clients act on possibly stale locations and back off on conflicts.
    Retry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    #[serde(default = "default_clients")]
    pub clients_per_shard: usize,
    #[serde(default)]
    pub cross_shard_rate: f64,
    /// Backoff after a conflict is uniform in `0..=retry_backoff_blocks`
    /// block intervals.
    #[serde(default = "default_backoff")]
    pub retry_backoff_blocks: u32,
    #[serde(default = "default_mode")]
    pub mode: ClientMode,
}

fn default_clients() -> usize {
    250
}

fn default_backoff() -> u32 {
    10
}

fn default_mode() -> ClientMode {
    ClientMode::OracleNoConflict
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            clients_per_shard: default_clients(),
            cross_shard_rate: 0.0,
            retry_backoff_blocks: default_backoff(),
            mode: default_mode(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "app", rename_all = "snake_case")]
pub enum WorkloadConfig {
    Scoin(ClientConfig),
    Kitties {
        trace: PathBuf,
        #[serde(default = "default_outstanding")]
        max_outstanding: usize,
    },
}

fn default_outstanding() -> usize {
    250
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub chains: Vec<ChainConfig>,
    #[serde(default = "default_shards")]
    pub n_shards: u32,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub duration_secs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_gwei")]
    pub gas_price_gwei: f64,
    #[serde(default = "default_usd")]
    pub token_usd: f64,
    #[serde(default)]
    pub header_delay_ms: u64,
    #[serde(default = "default_series")]
    pub series_interval_secs: u64,
}

fn default_shards() -> u32 {
    1
}

fn default_gwei() -> f64 {
    DEFAULT_GAS_PRICE_GWEI
}

fn default_usd() -> f64 {
    DEFAULT_TOKEN_USD
}

fn default_series() -> u64 {
    10
}

impl ExperimentConfig {
    pub fn scoin(n_shards: u32, clients: ClientConfig, duration_secs: u64, seed: u64) -> Self {
        ExperimentConfig {
            chains: vec![],
            n_shards,
            workload: WorkloadConfig::Scoin(clients),
            duration_secs,
            seed,
            gas_price_gwei: DEFAULT_GAS_PRICE_GWEI,
            token_usd: DEFAULT_TOKEN_USD,
            header_delay_ms: 0,
            series_interval_secs: default_series(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The configured chains, or `n_shards` Burrow-like ones.
    pub fn chain_configs(&self) -> Vec<ChainConfig> {
        if self.chains.is_empty() {
            (0..self.n_shards).map(|i| ChainConfig::burrow_like(ChainId(i))).collect()
        } else {
            self.chains.clone()
        }
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs(self.duration_secs)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_shards == 0 {
            return Err(SimError::Config("n_shards must be >= 1".into()));
        }
        if !self.chains.is_empty() && self.chains.len() != self.n_shards as usize {
            return Err(SimError::Config(format!(
                "{} chains listed for {} shards",
                self.chains.len(),
                self.n_shards
            )));
        }
        for c in &self.chain_configs() {
            c.validate()?;
        }
        if !(self.gas_price_gwei >= 0.0 && self.token_usd >= 0.0) {
            return Err(SimError::Config("prices must be non-negative".into()));
        }
        if self.series_interval_secs == 0 {
            return Err(SimError::Config("series_interval_secs must be >= 1".into()));
        }
        match &self.workload {
            WorkloadConfig::Scoin(c) => {
                if !(0.0..=1.0).contains(&c.cross_shard_rate) {
                    return Err(SimError::Config("cross_shard_rate must be in [0, 1]".into()));
                }
                if c.cross_shard_rate > 0.0 && self.n_shards < 2 {
                    return Err(SimError::Config("cross-shard traffic needs at least 2 shards".into()));
                }
                if c.clients_per_shard == 0 {
                    return Err(SimError::Config("clients_per_shard must be >= 1".into()));
                }
            }
            WorkloadConfig::Kitties { max_outstanding, .. } => {
                if *max_outstanding == 0 {
                    return Err(SimError::Config("max_outstanding must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}
