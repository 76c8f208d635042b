use chainmove::workload::dag::build_dag;
use chainmove::workload::replay::{replay, ReplayConfig};
use chainmove::workload::trace::{parse_trace, render_trace, TraceOp};
use chainmove::workload::tracegen::{generate, TraceParams};
use proptest::prelude::*;

fn trace(n_txs: usize, owners: usize, seed: u64) -> Vec<chainmove::workload::trace::TraceTx> {
    generate(&TraceParams {
        n_txs,
        owners,
        seed,
        ..TraceParams::default()
    })
}

#[test]
fn generated_trace_survives_text_roundtrip() {
    let t = trace(500, 40, 3);
    assert_eq!(t.len(), 500);
    assert_eq!(parse_trace(&render_trace(&t)).unwrap(), t);
}

#[test]
fn dag_drains_in_trace_order() {
    let t = trace(400, 30, 8);
    let mut dag = build_dag(&t).unwrap();
    assert_eq!(dag.len(), 400);
    for tx in &t {
        assert!(dag.is_leaf(tx.id), "tx {} blocked", tx.id);
        dag.complete(tx.id).unwrap();
    }
    assert!(dag.is_drained());
}

#[test]
fn dag_edges_point_backwards() {
    let t = trace(300, 20, 4);
    let dag = build_dag(&t).unwrap();
    assert!(dag.edge_count() > 0);
    for tx in &t {
        for dep in dag.dependencies(tx.id).unwrap() {
            assert!(dep < tx.id);
        }
    }
}

#[test]
fn breeding_across_shards_inserts_moves() {
    let t = trace(600, 60, 12);
    let breeds = t.iter().filter(|tx| matches!(tx.op, TraceOp::Breed { .. })).count();
    assert!(breeds > 0);
    let one = replay(&t, &ReplayConfig::burrow(1)).unwrap();
    let four = replay(&t, &ReplayConfig::burrow(4)).unwrap();
    assert_eq!(one.moves_inserted, 0);
    assert!(four.moves_inserted > 0);
    assert_eq!(one.final_state, four.final_state);
}

#[test]
fn outstanding_cap_is_respected() {
    let t = trace(300, 30, 5);
    let mut cfg = ReplayConfig::burrow(3);
    cfg.max_outstanding = 7;
    let stats = replay(&t, &cfg).unwrap();
    assert!(stats.max_outstanding_seen <= 7);
    assert_eq!(stats.final_state, replay(&t, &ReplayConfig::burrow(1)).unwrap().final_state);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sharded_replay_matches_sequential(
        n in 20usize..200,
        owners in 2usize..40,
        shards in 2u32..6,
        cap in 1usize..50,
        seed in any::<u64>(),
    ) {
        let t = trace(n, owners, seed);
        let mut cfg = ReplayConfig::burrow(shards);
        cfg.max_outstanding = cap;
        let sharded = replay(&t, &cfg).unwrap();
        let sequential = replay(&t, &ReplayConfig::burrow(1)).unwrap();
        prop_assert_eq!(sharded.txs, n);
        prop_assert_eq!(sharded.final_state, sequential.final_state);
    }
}
