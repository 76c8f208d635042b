//! Moves between two heterogeneous chains: an Ethereum-like chain (id 0) and
//! a Burrow-like chain (id 1).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::apps::kitties::KITTY_CORE;
use crate::apps::scoin::TOKEN;
use crate::apps::standard_registry;
use crate::apps::state_n::state_n_name;
use crate::chain::ChainConfig;
use crate::hash::{Address, ChainId};
use crate::script::{Script, ScriptError};
use crate::sim::metrics::{gas_row, GasRow};
use crate::vm::{Transaction, Value};

pub const ETH: ChainId = ChainId(0);
pub const BURROW: ChainId = ChainId(1);

const OWNER: Address = Address([0x11; 20]);
const RELAYER: Address = Address([0x22; 20]);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IbcOp {
    Scoin,
    Kitties,
    State1,
    State10,
    State100,
}

impl IbcOp {
    pub const ALL: [IbcOp; 5] = [IbcOp::Scoin, IbcOp::Kitties, IbcOp::State1, IbcOp::State10, IbcOp::State100];

    pub fn as_str(self) -> &'static str {
        match self {
            IbcOp::Scoin => "scoin",
            IbcOp::Kitties => "kitties",
            IbcOp::State1 => "state1",
            IbcOp::State10 => "state10",
            IbcOp::State100 => "state100",
        }
    }
}

impl fmt::Display for IbcOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IbcOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IbcOp::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown operation `{s}` (scoin, kitties, state1, state10, state100)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    EthToBurrow,
    BurrowToEth,
}

impl Direction {
    pub fn endpoints(self) -> (ChainId, ChainId) {
        match self {
            Direction::EthToBurrow => (ETH, BURROW),
            Direction::BurrowToEth => (BURROW, ETH),
        }
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eth-to-burrow" => Ok(Direction::EthToBurrow),
            "burrow-to-eth" => Ok(Direction::BurrowToEth),
            _ => Err(format!("unknown direction `{s}` (eth-to-burrow, burrow-to-eth)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbcReport {
    pub op: IbcOp,
    pub direction: Direction,
    pub source_p: u64,
    pub move1_time_secs: f64,
    pub eligible_time_secs: f64,
    pub move2_time_secs: f64,
    /// Time from Move1 inclusion until the target could accept the Move2.
    pub eligible_delay_secs: f64,
    /// Storage words carried by the moved contract.
    pub state_words: usize,
    pub move1: GasRow,
    pub move2: GasRow,
}

/// Deploys the contract for `op` on the source chain, then moves it.
pub fn run_ibc(op: IbcOp, direction: Direction, gas_price_gwei: f64, token_usd: f64) -> Result<IbcReport, ScriptError> {
    let cfgs = [ChainConfig::ethereum_like(ETH), ChainConfig::burrow_like(BURROW)];
    let mut s = Script::new(&cfgs, Arc::new(standard_registry()))?;
    let (src, dst) = direction.endpoints();
    let contract = deploy(&mut s, op, src)?;
    let words = s.net.chain(src).state().contract(&contract).map(|r| r.storage.len()).unwrap_or(0);
    let out = s.move_contract(contract, src, dst, OWNER, RELAYER)?;
    let row = |name: &str, r: &crate::vm::Receipt| {
        gas_row(name, 1, r.gas_used, r.code_deposit_gas, gas_price_gwei, token_usd)
    };
    Ok(IbcReport {
        op,
        direction,
        source_p: s.net.chain(src).config().p,
        move1_time_secs: out.move1_time.as_secs_f64(),
        eligible_time_secs: out.eligible_time.as_secs_f64(),
        move2_time_secs: out.move2_time.as_secs_f64(),
        eligible_delay_secs: (out.eligible_time - out.move1_time).as_secs_f64(),
        state_words: words,
        move1: row("move1", &out.move1),
        move2: row("move2", &out.move2),
    })
}

fn deploy(s: &mut Script, op: IbcOp, chain: ChainId) -> Result<Address, ScriptError> {
    let out_addr = |r: &crate::vm::Receipt| r.output.first().and_then(Value::as_addr).expect("address output");
    match op {
        IbcOp::Scoin => {
            let (token, _) = s.create(chain, OWNER, TOKEN, [0; 32], vec![])?;
            let r = s.send_ok(
                chain,
                Transaction::call(OWNER, 0, token, "new_account", vec![Value::U128(1_000)]),
                "new_account",
            )?;
            Ok(out_addr(&r))
        }
        IbcOp::Kitties => {
            let (core, _) = s.create(chain, OWNER, KITTY_CORE, [0; 32], vec![])?;
            let r = s.send_ok(
                chain,
                Transaction::call(OWNER, 0, core, "create_promo_cat", vec![Value::Addr(OWNER), Value::Word([7; 32])]),
                "create_promo_cat",
            )?;
            Ok(out_addr(&r))
        }
        IbcOp::State1 | IbcOp::State10 | IbcOp::State100 => {
            let n = match op {
                IbcOp::State1 => 1,
                IbcOp::State10 => 10,
                _ => 100,
            };
            Ok(s.create(chain, OWNER, &state_n_name(n), [0; 32], vec![])?.0)
        }
    }
}
