use crate::hash::{hash_bytes, Address};

/// Hash partitioning: `H(address)` read as a 256-bit big-endian integer,
/// mod `n_shards`.
pub fn shard_of(address: &Address, n_shards: u32) -> u32 {
    assert!(n_shards >= 1, "n_shards must be >= 1");
    let n = n_shards as u64;
    hash_bytes(address.as_bytes())
        .0
        .iter()
        .fold(0u64, |r, b| (r * 256 + *b as u64) % n) as u32
}
