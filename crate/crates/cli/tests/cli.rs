use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chainmove(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainmove"))
        .args(args)
        .output()
        .expect("spawn chainmove")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exported_proof_verifies_and_is_rejected_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("move2.bin");
    let headers = dir.path().join("headers.bin");
    let out = chainmove(&["export-proof", "--payload", path(&payload), "--headers", path(&headers), "--words", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(&std::fs::read(&payload).unwrap()[..4], b"MOV2");

    let ok = chainmove(&["verify-proof", path(&payload), path(&headers), "--p", "2", "--target", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("OK "), "{}", stdout(&ok));

    let wrong = chainmove(&["verify-proof", path(&payload), path(&headers), "--p", "2", "--target", "2"]);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stdout(&wrong).contains("WrongTarget"));

    let replay = chainmove(&[
        "verify-proof",
        path(&payload),
        path(&headers),
        "--p",
        "2",
        "--target",
        "1",
        "--watermark",
        "1",
    ]);
    assert_eq!(replay.status.code(), Some(1));
    assert!(stdout(&replay).contains("Replay"));

    let too_deep = chainmove(&["verify-proof", path(&payload), path(&headers), "--p", "50", "--target", "1"]);
    assert_eq!(too_deep.status.code(), Some(1));
    assert!(stdout(&too_deep).starts_with("REJECT"));
}

#[test]
fn truncated_payload_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("move2.bin");
    let headers = dir.path().join("headers.bin");
    assert!(chainmove(&["export-proof", "--payload", path(&payload), "--headers", path(&headers)]).status.success());
    let bytes = std::fs::read(&payload).unwrap();
    std::fs::write(&payload, &bytes[..bytes.len() / 2]).unwrap();
    let out = chainmove(&["verify-proof", path(&payload), path(&headers), "--p", "2", "--target", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_trace_replays_like_one_shard() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let gen = chainmove(&["gen-trace", "--out", path(&trace), "--txs", "300", "--seed", "9"]);
    assert!(gen.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("# chainmove-trace v1"));
    assert_eq!(text.lines().count(), 301);

    let out = chainmove(&["replay-dag", "--trace", path(&trace), "--shards", "4", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["matches_sequential"], Value::Bool(true));
    assert!(v["cross_shard_txs"].as_u64().unwrap() > 0);
}

#[test]
fn ibc_eligibility_follows_source_finality() {
    let out = chainmove(&["run-ibc", "--op", "all", "--direction", "both", "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 10);
    for r in reports {
        let expected = match r["direction"].as_str().unwrap() {
            "eth_to_burrow" => 90.0,
            "burrow_to_eth" => 10.0,
            d => panic!("unexpected direction {d}"),
        };
        assert_eq!(r["eligible_delay_secs"].as_f64().unwrap(), expected);
    }
}

#[test]
fn sharding_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = chainmove(&[
        "run-sharding",
        "--shards",
        "2",
        "--cross-rate",
        "0.1",
        "--clients",
        "10",
        "--duration",
        "60",
        "--seed",
        "4",
        "--out",
        path(&out_dir),
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("violations=0"));
    let headers = [
        ("latency.csv", "class,seconds,retries"),
        ("cdf.csv", "seconds,fraction"),
        ("throughput.csv", "t,shard,tps"),
        ("gas.csv", "operation,count,gas,code_deposit_gas,usd,code_deposit_share"),
        ("retries.csv", "retries,count"),
    ];
    for (file, header) in headers {
        let text = std::fs::read_to_string(out_dir.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
    }
}

#[test]
fn toml_config_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
n_shards = 2
duration_secs = 60
seed = 11

[workload]
app = "scoin"
clients_per_shard = 8
cross_shard_rate = 0.2
mode = "RETRY"
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = |o: &Path| {
        chainmove(&["run-sharding", "--config", path(&config), "--out", path(o), "--format", "json", "--check"])
    };
    let first = run(&out_dir);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("shards=2"));

    let again_dir = dir.path().join("again");
    assert!(run(&again_dir).status.success());
    let a = std::fs::read_dir(&out_dir).unwrap().count();
    assert!(a > 0);
    for entry in std::fs::read_dir(&out_dir).unwrap() {
        let entry = entry.unwrap();
        let left = std::fs::read(entry.path()).unwrap();
        let right = std::fs::read(again_dir.join(entry.file_name())).unwrap();
        assert_eq!(left, right, "{:?}", entry.file_name());
    }
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "n_shards = \"many\"\n").unwrap();
    let out = chainmove(&["run-sharding", "--config", path(&config), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
