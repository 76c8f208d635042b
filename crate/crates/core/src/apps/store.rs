//! Typed storage slots and argument decoding shared by the bundled contracts.

use crate::hash::{hash_parts, word_from_u128, word_to_u128, Address, ChainId, Hash256, Word};
use crate::vm::{AbortReason, Ctx, Value};

/// Storage key of a named scalar slot.
pub fn slot(name: &str) -> Word {
    hash_parts(&[b"slot:", name.as_bytes()]).0
}

/// Storage key of entry `key` in the named mapping.
pub fn map_slot(name: &str, key: &[u8]) -> Word {
    hash_parts(&[b"map:", name.as_bytes(), b":", key]).0
}

pub fn load_u128(ctx: &Ctx<'_>, key: &Word) -> u128 {
    word_to_u128(&ctx.sload(key))
}

pub fn store_u128(ctx: &mut Ctx<'_>, key: Word, v: u128) -> Result<(), AbortReason> {
    ctx.sstore(key, word_from_u128(v))
}

pub fn load_addr(ctx: &Ctx<'_>, key: &Word) -> Address {
    Address::from_word(&ctx.sload(key))
}

pub fn store_addr(ctx: &mut Ctx<'_>, key: Word, a: Address) -> Result<(), AbortReason> {
    ctx.sstore(key, a.to_word())
}

pub fn load_chain(ctx: &Ctx<'_>, key: &Word) -> ChainId {
    ChainId(load_u128(ctx, key) as u32)
}

pub fn store_chain(ctx: &mut Ctx<'_>, key: Word, c: ChainId) -> Result<(), AbortReason> {
    store_u128(ctx, key, c.0 as u128)
}

pub fn load_bool(ctx: &Ctx<'_>, key: &Word) -> bool {
    load_u128(ctx, key) != 0
}

pub fn store_bool(ctx: &mut Ctx<'_>, key: Word, b: bool) -> Result<(), AbortReason> {
    store_u128(ctx, key, b as u128)
}

fn arg(args: &[Value], i: usize) -> Result<&Value, AbortReason> {
    args.get(i).ok_or(AbortReason::BadArgs)
}

pub fn arg_u128(args: &[Value], i: usize) -> Result<u128, AbortReason> {
    arg(args, i)?.as_u128().ok_or(AbortReason::BadArgs)
}

pub fn arg_addr(args: &[Value], i: usize) -> Result<Address, AbortReason> {
    arg(args, i)?.as_addr().ok_or(AbortReason::BadArgs)
}

pub fn arg_word(args: &[Value], i: usize) -> Result<Word, AbortReason> {
    arg(args, i)?.as_word().ok_or(AbortReason::BadArgs)
}

pub fn arg_chain(args: &[Value], i: usize) -> Result<ChainId, AbortReason> {
    arg(args, i)?.as_chain().ok_or(AbortReason::BadArgs)
}

pub fn arg_bool(args: &[Value], i: usize) -> Result<bool, AbortReason> {
    arg(args, i)?.as_bool().ok_or(AbortReason::BadArgs)
}

/// Code hash of the running contract.
pub fn own_code(ctx: &Ctx<'_>) -> Hash256 {
    ctx.record(&ctx.this())
        .map(|r| r.code_hash)
        .unwrap_or(Hash256::ZERO)
}

pub fn unknown(method: &str) -> AbortReason {
    AbortReason::UnknownMethod(method.to_string())
}
