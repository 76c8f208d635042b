use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chainmove::apps::standard_registry;
use chainmove::apps::state_n::state_n_name;
use chainmove::codec::{Decode, Encode, Reader};
use chainmove::script::Script;
use chainmove::sim::ibc::{run_ibc, Direction, IbcOp, IbcReport};
use chainmove::sim::{export, ClientConfig, ClientMode, ExportFormat, WorkloadConfig};
use chainmove::workload::{generate, load_trace, replay, write_trace, ReplayConfig, TraceParams};
use chainmove::{
    build_move2, check_move2, Address, BlockHeader, ChainConfig, ChainId, ExperimentConfig, HeaderRegistry,
    Move2Payload, Transaction,
};

#[derive(Parser)]
#[command(name = "chainmove", version, about = "Movable smart contract simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a sharding experiment and export its metrics.
    RunSharding(ShardingArgs),
    /// Move one contract between the Ethereum-like and Burrow-like chains.
    RunIbc(IbcArgs),
    /// Replay a kitties trace across shards.
    ReplayDag(ReplayArgs),
    /// Check a Move2 payload against a header file.
    VerifyProof(VerifyArgs),
    /// Write a synthetic kitties trace.
    GenTrace(GenTraceArgs),
    /// Produce a sample Move2 payload and the source header file.
    ExportProof(ExportProofArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum App {
    Scoin,
    Kitties,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Oracle,
    Retry,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ShardingArgs {
    /// TOML experiment config. Flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    shards: u32,
    #[arg(long, default_value_t = 0.0)]
    cross_rate: f64,
    /// Clients per shard.
    #[arg(long, default_value_t = 250)]
    clients: usize,
    #[arg(long, value_enum, default_value_t = Mode::Oracle)]
    mode: Mode,
    #[arg(long, default_value_t = 10)]
    retry_backoff_blocks: u32,
    #[arg(long, default_value_t = 300)]
    duration: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = App::Scoin)]
    app: App,
    /// Trace file for `--app kitties`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 250)]
    max_outstanding: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit nonzero when the run reports invariant violations.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct IbcArgs {
    /// scoin, kitties, state1, state10, state100 or all.
    #[arg(long, default_value = "all")]
    op: String,
    /// eth-to-burrow, burrow-to-eth or both.
    #[arg(long, default_value = "both")]
    direction: String,
    #[arg(long, default_value_t = chainmove::sim::metrics::DEFAULT_GAS_PRICE_GWEI)]
    gwei: f64,
    #[arg(long, default_value_t = chainmove::sim::metrics::DEFAULT_TOKEN_USD)]
    usd: f64,
    /// Fail unless every Move2 became eligible exactly p blocks after Move1.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 4)]
    shards: u32,
    #[arg(long, default_value_t = 250)]
    max_outstanding: usize,
    /// Include every emitted transaction in the output.
    #[arg(long)]
    emitted: bool,
    /// Compare the final state against a single-shard replay.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Move2 payload file.
    payload: PathBuf,
    /// Concatenated source-chain headers from genesis.
    headers: PathBuf,
    /// Finality depth of the source chain.
    #[arg(long)]
    p: u64,
    /// Chain the payload is checked for.
    #[arg(long)]
    target: u32,
    /// Highest nonce the target already holds for the contract.
    #[arg(long)]
    watermark: Option<u64>,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long, default_value = "trace.txt")]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    txs: usize,
    #[arg(long, default_value_t = 120)]
    owners: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExportProofArgs {
    #[arg(long, default_value = "move2.bin")]
    payload: PathBuf,
    #[arg(long, default_value = "headers.bin")]
    headers: PathBuf,
    /// Storage words of the moved contract (1, 10 or 100).
    #[arg(long, default_value_t = 10)]
    words: usize,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether all requested checks passed.
fn dispatch(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::RunSharding(a) => run_sharding(a),
        Cmd::RunIbc(a) => ibc(a),
        Cmd::ReplayDag(a) => replay_dag(a),
        Cmd::VerifyProof(a) => verify(a),
        Cmd::GenTrace(a) => gen_trace(a),
        Cmd::ExportProof(a) => export_proof(a),
    }
}

fn experiment(a: &ShardingArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &a.config {
        return Ok(ExperimentConfig::load(path)?);
    }
    let mut cfg = ExperimentConfig::scoin(
        a.shards,
        ClientConfig {
            clients_per_shard: a.clients,
            cross_shard_rate: a.cross_rate,
            retry_backoff_blocks: a.retry_backoff_blocks,
            mode: match a.mode {
                Mode::Oracle => ClientMode::OracleNoConflict,
                Mode::Retry => ClientMode::Retry,
            },
        },
        a.duration,
        a.seed,
    );
    if let App::Kitties = a.app {
        let trace = a.trace.clone().context("--app kitties needs --trace")?;
        cfg.workload = WorkloadConfig::Kitties {
            trace,
            max_outstanding: a.max_outstanding,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_sharding(a: ShardingArgs) -> Result<bool> {
    let cfg = experiment(&a)?;
    let report = chainmove::run(&cfg)?;
    let format = match a.format {
        Format::Csv => ExportFormat::Csv,
        Format::Json => ExportFormat::Json,
    };
    for f in export(&report, format, &a.out)? {
        eprintln!("wrote {f}");
    }
    println!(
        "shards={} completed={} throughput={:.2} tx/s cross_shard={:.4} violations={}",
        report.n_shards,
        report.completed,
        report.throughput,
        report.cross_shard_fraction(),
        report.violations.len()
    );
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    Ok(!a.check || report.violations.is_empty())
}

fn ibc(a: IbcArgs) -> Result<bool> {
    let ops: Vec<IbcOp> = if a.op == "all" {
        IbcOp::ALL.to_vec()
    } else {
        vec![a.op.parse().map_err(anyhow::Error::msg)?]
    };
    let dirs: Vec<Direction> = if a.direction == "both" {
        vec![Direction::EthToBurrow, Direction::BurrowToEth]
    } else {
        vec![a.direction.parse().map_err(anyhow::Error::msg)?]
    };
    let mut reports: Vec<IbcReport> = Vec::new();
    for &op in &ops {
        for &dir in &dirs {
            reports.push(run_ibc(op, dir, a.gwei, a.usd)?);
        }
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    if !a.check {
        return Ok(true);
    }
    let mut ok = true;
    for r in &reports {
        let (src, _) = r.direction.endpoints();
        let interval = source_config(src).block_interval.as_secs_f64();
        let want = r.source_p as f64 * interval;
        if r.eligible_delay_secs != want {
            eprintln!("{} {:?}: eligible after {} s, expected {want} s", r.op, r.direction, r.eligible_delay_secs);
            ok = false;
        }
    }
    Ok(ok)
}

fn source_config(id: ChainId) -> ChainConfig {
    if id == chainmove::sim::ibc::ETH {
        ChainConfig::ethereum_like(id)
    } else {
        ChainConfig::burrow_like(id)
    }
}

fn replay_dag(a: ReplayArgs) -> Result<bool> {
    let trace = load_trace(&a.trace)?;
    let cfg = ReplayConfig {
        max_outstanding: a.max_outstanding,
        ..ReplayConfig::burrow(a.shards)
    };
    let mut stats = replay(&trace, &cfg)?;
    let mut ok = stats.max_outstanding_seen <= stats.max_outstanding;
    let mut matches = None;
    if a.check {
        let oracle = replay(&trace, &ReplayConfig::burrow(1))?;
        let same = oracle.final_state == stats.final_state;
        ok &= same;
        matches = Some(same);
    }
    if !a.emitted {
        stats.emitted.clear();
    }
    let mut out = serde_json::to_value(&stats)?;
    if let Some(same) = matches {
        out["matches_sequential"] = same.into();
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(!a.check || ok)
}

fn read_headers(path: &Path) -> Result<Vec<BlockHeader>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut r = Reader::new(&bytes);
    let mut out = Vec::new();
    while r.remaining() > 0 {
        out.push(BlockHeader::decode_from(&mut r).with_context(|| format!("header {}", out.len()))?);
    }
    Ok(out)
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let bytes = fs::read(&a.payload).with_context(|| format!("reading {}", a.payload.display()))?;
    let payload = Move2Payload::from_file_bytes(&bytes).context("decoding payload")?;
    let source = payload.proof.source_chain;
    let mut reg = HeaderRegistry::new();
    reg.add_peer(source, a.p);
    for h in read_headers(&a.headers)? {
        if h.chain != source {
            bail!("header for chain {} in a file for chain {}", h.chain.0, source.0);
        }
        reg.receive(h)?;
    }
    match check_move2(ChainId(a.target), &reg, a.watermark, &payload) {
        Ok(()) => {
            println!(
                "OK contract {} nonce {} from chain {} height {}",
                payload.contract(),
                payload.proof.record.nonce,
                source.0,
                payload.proof.source_height
            );
            Ok(true)
        }
        Err(reason) => {
            println!("REJECT {reason:?}");
            Ok(false)
        }
    }
}

fn gen_trace(a: GenTraceArgs) -> Result<bool> {
    let trace = generate(&TraceParams {
        n_txs: a.txs,
        owners: a.owners,
        seed: a.seed,
        ..Default::default()
    });
    write_trace(&a.out, &trace)?;
    eprintln!("wrote {} transactions to {}", trace.len(), a.out.display());
    Ok(true)
}

fn export_proof(a: ExportProofArgs) -> Result<bool> {
    let (src, dst) = (ChainId(0), ChainId(1));
    let cfgs = [ChainConfig::burrow_like(src), ChainConfig::burrow_like(dst)];
    let mut s = Script::new(&cfgs, Arc::new(standard_registry()))?;
    let owner = Address([0x11; 20]);
    let (contract, _) = s.create(src, owner, &state_n_name(a.words), [0; 32], vec![])?;
    s.send_ok(src, Transaction::move1(owner, 0, contract, dst), "move1")?;
    let p = s.net.chain(src).config().p;
    s.net.advance_blocks(src, p)?;
    let payload = build_move2(s.net.chain(src), &contract)?;
    fs::write(&a.payload, payload.to_file_bytes())?;
    let headers: Vec<u8> = s.net.chain(src).headers().iter().flat_map(|h| h.encode()).collect();
    fs::write(&a.headers, headers)?;
    println!(
        "contract {} moved from chain {} to chain {} (p = {p}); payload {} headers {}",
        contract,
        src.0,
        dst.0,
        a.payload.display(),
        a.headers.display()
    );
    Ok(true)
}

