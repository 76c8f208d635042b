//! Fixtures shared by the benches.

use chainmove::sim::SimError;
use chainmove::workload::ScoinWorld;
use chainmove::{ChainConfig, ChainId, SimTime, Transaction};

/// `n` distinct 32-byte leaves.
pub fn leaves(n: usize) -> Vec<[u8; 32]> {
    (0..n)
        .map(|i| {
            let mut l = [0u8; 32];
            l[..8].copy_from_slice(&(i as u64).to_be_bytes());
            l
        })
        .collect()
}

/// One Burrow-like shard with `clients` funded accounts and one pending
/// transfer per client in its mempool.
pub fn loaded_shard(clients: usize) -> Result<ScoinWorld, SimError> {
    let mut world = ScoinWorld::build(&[ChainConfig::burrow_like(ChainId(0))], clients, SimTime::ZERO)?;
    for c in 0..clients {
        let dest = (c + 1) % clients;
        let tx = Transaction::call(
            world.owners[c],
            1,
            world.accounts[c].address,
            "transfer",
            world.accounts[dest].transfer_args(1),
        );
        world.engine.submit(ChainId(0), tx)?;
    }
    Ok(world)
}
