use std::time::{Duration, Instant};

use chainmove::sim::config::{ClientConfig, ClientMode};
use chainmove::sim::metrics::TxClass;
use chainmove::{run, ExperimentConfig};
use proptest::prelude::*;

fn config(shards: u32, clients: usize, rate: f64, mode: ClientMode, secs: u64, seed: u64) -> ExperimentConfig {
    let cc = ClientConfig {
        clients_per_shard: clients,
        cross_shard_rate: rate,
        mode,
        ..ClientConfig::default()
    };
    ExperimentConfig::scoin(shards, cc, secs, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_runs_have_no_violations(
        shards in 1u32..=4,
        clients in 1usize..=12,
        rate in 0.0f64..=1.0,
        retry in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let rate = if shards == 1 { 0.0 } else { rate };
        let mode = if retry { ClientMode::Retry } else { ClientMode::OracleNoConflict };
        let report = run(&config(shards, clients, rate, mode, 120, seed)).unwrap();
        prop_assert!(report.violations.is_empty(), "{:?}", report.violations);
        // A lone client per shard has no same-shard recipient.
        if clients >= 2 {
            prop_assert!(report.completed > 0);
        }
        prop_assert_eq!(report.retry_histogram.values().sum::<u64>(), report.completed);
        for s in &report.latency_samples {
            // Every transfer waits for at least one block.
            prop_assert!(s.seconds >= 5.0);
            if s.class == TxClass::SingleShard && s.retries == 0 {
                prop_assert!(s.seconds <= 10.0);
            }
        }
        if shards == 1 {
            prop_assert_eq!(report.cross_shard_count, 0);
        }
        if mode == ClientMode::OracleNoConflict {
            prop_assert!(report.retry_histogram.keys().all(|&k| k == 0));
        }
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = config(3, 20, 0.3, ClientMode::Retry, 200, 99);
    assert_eq!(run(&cfg).unwrap().to_json(), run(&cfg).unwrap().to_json());
}

#[test]
fn different_seeds_differ() {
    let a = run(&config(2, 20, 0.5, ClientMode::OracleNoConflict, 200, 1)).unwrap();
    let b = run(&config(2, 20, 0.5, ClientMode::OracleNoConflict, 200, 2)).unwrap();
    assert_ne!(a.latency_samples, b.latency_samples);
}

#[test]
fn eight_shards_two_thousand_clients_run_fast() {
    let cfg = config(8, 250, 0.1, ClientMode::OracleNoConflict, 600, 5);
    let start = Instant::now();
    let report = run(&cfg).unwrap();
    let took = start.elapsed();
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert!(report.completed > 100_000, "{}", report.completed);
    assert!(took < Duration::from_secs(120), "{took:?}");
}
