//! Experiment measurements and their CSV/JSON export.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vm::Receipt;

pub const DEFAULT_GAS_PRICE_GWEI: f64 = 2.0;
pub const DEFAULT_TOKEN_USD: f64 = 144.0;

/// `gas × price_gwei × 1e-9 × token_usd`.
pub fn usd(gas: u64, gas_price_gwei: f64, token_usd: f64) -> f64 {
    gas as f64 * gas_price_gwei * 1e-9 * token_usd
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxClass {
    SingleShard,
    CrossShard,
}

impl TxClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TxClass::SingleShard => "single_shard",
            TxClass::CrossShard => "cross_shard",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub class: TxClass,
    pub seconds: f64,
    pub retries: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    /// End of the interval, simulated seconds.
    pub t: f64,
    /// `None` for the aggregate over all shards.
    pub shard: Option<u32>,
    pub tps: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GasRow {
    pub operation: String,
    pub count: u64,
    pub gas: u64,
    pub code_deposit_gas: u64,
    pub usd: f64,
    pub code_deposit_share: f64,
}

/// Accumulates gas per named operation.
#[derive(Clone, Debug, Default)]
pub struct GasAccumulator {
    rows: BTreeMap<String, (u64, u64, u64)>,
}

impl GasAccumulator {
    pub fn add(&mut self, operation: &str, receipt: &Receipt) {
        self.add_raw(operation, receipt.gas_used, receipt.code_deposit_gas);
    }

    pub fn add_raw(&mut self, operation: &str, gas: u64, code_deposit_gas: u64) {
        let e = self.rows.entry(operation.to_string()).or_default();
        e.0 += 1;
        e.1 += gas;
        e.2 += code_deposit_gas;
    }

    pub fn table(&self, gas_price_gwei: f64, token_usd: f64) -> Vec<GasRow> {
        self.rows
            .iter()
            .map(|(op, &(count, gas, dep))| gas_row(op, count, gas, dep, gas_price_gwei, token_usd))
            .collect()
    }
}

pub fn gas_row(
    operation: &str,
    count: u64,
    gas: u64,
    code_deposit_gas: u64,
    gas_price_gwei: f64,
    token_usd: f64,
) -> GasRow {
    GasRow {
        operation: operation.to_string(),
        count,
        gas,
        code_deposit_gas,
        usd: usd(gas, gas_price_gwei, token_usd),
        code_deposit_share: if gas == 0 {
            0.0
        } else {
            code_deposit_gas as f64 / gas as f64
        },
    }
}

/// Gas table over labelled receipts: one row per distinct label.
pub fn gas_report<'a>(
    receipts: impl IntoIterator<Item = (&'a str, &'a Receipt)>,
    gas_price_gwei: f64,
    token_usd: f64,
) -> Vec<GasRow> {
    let mut acc = GasAccumulator::default();
    for (op, r) in receipts {
        acc.add(op, r);
    }
    acc.table(gas_price_gwei, token_usd)
}

/// Empirical CDF as sorted `(value, cumulative fraction)` pairs.
pub fn cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = frac,
            _ => out.push((*x, frac)),
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_shards: u32,
    pub duration_secs: u64,
    pub seed: u64,
    /// Completed application transfers per second over the measured window.
    pub throughput: f64,
    pub throughput_series: Vec<ThroughputPoint>,
    pub latency_samples: Vec<LatencySample>,
    pub gas_table: Vec<GasRow>,
    /// Number of retries → number of completed transfers with that count.
    pub retry_histogram: BTreeMap<u32, u64>,
    pub completed: u64,
    pub cross_shard_count: u64,
    pub aborts: BTreeMap<String, u64>,
    pub violations: Vec<String>,
}

impl MetricsReport {
    pub fn cross_shard_fraction(&self) -> f64 {
        if self.completed == 0 {
            0.0
        } else {
            self.cross_shard_count as f64 / self.completed as f64
        }
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.latency_samples.iter().map(|s| s.seconds).collect()
    }

    pub fn fraction_above(&self, threshold_secs: f64) -> f64 {
        let n = self.latency_samples.len();
        if n == 0 {
            return 0.0;
        }
        let above = self
            .latency_samples
            .iter()
            .filter(|s| s.seconds > threshold_secs)
            .count();
        above as f64 / n as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

pub const LATENCY_HEADER: [&str; 3] = ["class", "seconds", "retries"];
pub const CDF_HEADER: [&str; 2] = ["seconds", "fraction"];
pub const THROUGHPUT_HEADER: [&str; 3] = ["t", "shard", "tps"];
pub const GAS_HEADER: [&str; 6] = [
    "operation",
    "count",
    "gas",
    "code_deposit_gas",
    "usd",
    "code_deposit_share",
];
pub const RETRY_HEADER: [&str; 2] = ["retries", "count"];

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `report` under directory `dir`: `report.json`, or one CSV file per
/// table (`latency.csv`, `cdf.csv`, `throughput.csv`, `gas.csv`,
/// `retries.csv`). Returns the files written.
pub fn export(report: &MetricsReport, format: ExportFormat, dir: &Path) -> Result<Vec<String>, ExportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    match format {
        ExportFormat::Json => {
            let path = dir.join("report.json");
            fs::write(&path, report.to_json()).map_err(io_err(&path))?;
            Ok(vec![path.display().to_string()])
        }
        ExportFormat::Csv => {
            let mut written = Vec::new();
            let mut open = |name: &str| -> Result<csv::Writer<fs::File>, ExportError> {
                let path = dir.join(name);
                let f = fs::File::create(&path).map_err(io_err(&path))?;
                written.push(path.display().to_string());
                Ok(csv::Writer::from_writer(f))
            };

            let mut w = open("latency.csv")?;
            w.write_record(LATENCY_HEADER)?;
            for s in &report.latency_samples {
                w.write_record([s.class.as_str(), &s.seconds.to_string(), &s.retries.to_string()])?;
            }
            w.flush().map_err(|e| ExportError::Csv(e.into()))?;

            let mut w = open("cdf.csv")?;
            w.write_record(CDF_HEADER)?;
            for (x, f) in cdf(&report.latencies()) {
                w.write_record([x.to_string(), f.to_string()])?;
            }
            w.flush().map_err(|e| ExportError::Csv(e.into()))?;

            let mut w = open("throughput.csv")?;
            w.write_record(THROUGHPUT_HEADER)?;
            for p in &report.throughput_series {
                let shard = p.shard.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
                w.write_record([p.t.to_string(), shard, p.tps.to_string()])?;
            }
            w.flush().map_err(|e| ExportError::Csv(e.into()))?;

            let mut w = open("gas.csv")?;
            w.write_record(GAS_HEADER)?;
            for r in &report.gas_table {
                w.write_record([
                    r.operation.clone(),
                    r.count.to_string(),
                    r.gas.to_string(),
                    r.code_deposit_gas.to_string(),
                    r.usd.to_string(),
                    r.code_deposit_share.to_string(),
                ])?;
            }
            w.flush().map_err(|e| ExportError::Csv(e.into()))?;

            let mut w = open("retries.csv")?;
            w.write_record(RETRY_HEADER)?;
            for (k, v) in &report.retry_histogram {
                w.write_record([k.to_string(), v.to_string()])?;
            }
            w.flush().map_err(|e| ExportError::Csv(e.into()))?;
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usd_formula() {
        assert!((usd(21_000, 2.0, 144.0) - 0.006048).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let c = cdf(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(c, vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
        assert!(cdf(&[]).is_empty());
    }

    #[test]
    fn share_zero_without_deposit() {
        let row = gas_row("m", 1, 100, 0, 2.0, 144.0);
        assert_eq!(row.code_deposit_share, 0.0);
    }

    #[test]
    fn json_and_csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let report = MetricsReport {
            latency_samples: vec![LatencySample {
                class: TxClass::CrossShard,
                seconds: 25.0,
                retries: 1,
            }],
            gas_table: vec![gas_row("transfer", 2, 60_000, 0, 2.0, 144.0)],
            ..Default::default()
        };
        export(&report, ExportFormat::Json, dir.path()).unwrap();
        let back: MetricsReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, report);
        let files = export(&report, ExportFormat::Csv, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let gas = fs::read_to_string(dir.path().join("gas.csv")).unwrap();
        assert_eq!(gas.lines().next().unwrap(), GAS_HEADER.join(","));
        let lat = fs::read_to_string(dir.path().join("latency.csv")).unwrap();
        assert_eq!(lat.lines().nth(1).unwrap(), "cross_shard,25,1");
    }
}
