//! Scalable token: one contract per account.
//!
//! The token contract only mints accounts. Each account holds a single
//! owner's balance and moves independently. Transfers are direct calls
//! between two accounts on the same chain, and each side checks that the
//! other was created by the same token with the same account code by
//! recomputing its address.

use crate::apps::store::{
    arg_addr, arg_chain, arg_u128, arg_word, load_addr, load_chain, load_u128, map_slot, own_code,
    slot, store_addr, store_chain, store_u128, unknown,
};
use crate::hash::{word_from_u128, word_to_u128, Address, ChainId, Hash256, Word};
use crate::vm::{code_hash_of, derive_address, AbortReason, Behavior, CallResult, Ctx, Value};

pub const TOKEN: &str = "SToken";
pub const ACCOUNT: &str = "SAccount";

pub const TOKEN_CODE_SIZE: usize = 2400;
pub const ACCOUNT_CODE_SIZE: usize = 2080;

/// Storage words an account holds before any allowance is set.
pub const ACCOUNT_WORDS: usize = 6;

pub struct SToken;

impl Behavior for SToken {
    fn name(&self) -> &str {
        TOKEN
    }

    fn code_size(&self) -> usize {
        TOKEN_CODE_SIZE
    }

    fn construct(&self, ctx: &mut Ctx<'_>, _args: &[Value]) -> Result<(), AbortReason> {
        let owner = ctx.caller();
        store_addr(ctx, slot("owner"), owner)?;
        store_u128(ctx, slot("total_supply"), 0)?;
        store_u128(ctx, slot("next_salt"), 0)?;
        ctx.sstore(slot("account_code"), code_hash_of(ACCOUNT).0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(method, "total_supply" | "next_salt" | "owner" | "account_code")
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "new_account" => {
                let owner = ctx.caller();
                new_account(ctx, owner, arg_u128(args, 0)?)
            }
            "new_account_for" => new_account(ctx, arg_addr(args, 0)?, arg_u128(args, 1)?),
            "total_supply" => Ok(vec![Value::U128(load_u128(ctx, &slot("total_supply")))]),
            "next_salt" => Ok(vec![Value::U128(load_u128(ctx, &slot("next_salt")))]),
            "owner" => Ok(vec![Value::Addr(load_addr(ctx, &slot("owner")))]),
            "account_code" => Ok(vec![Value::Word(ctx.sload(&slot("account_code")))]),
            _ => Err(unknown(method)),
        }
    }
}

fn new_account(ctx: &mut Ctx<'_>, owner: Address, initial: u128) -> CallResult {
    if initial > 0 && ctx.caller() != load_addr(ctx, &slot("owner")) {
        return Err(AbortReason::Unauthorized);
    }
    let salt_n = load_u128(ctx, &slot("next_salt"));
    let salt = word_from_u128(salt_n);
    store_u128(ctx, slot("next_salt"), salt_n + 1)?;
    let supply = load_u128(ctx, &slot("total_supply"));
    store_u128(ctx, slot("total_supply"), supply + initial)?;
    let code = Hash256(ctx.sload(&slot("account_code")));
    let account = ctx.create(
        code,
        salt,
        &[Value::Addr(owner), Value::U128(initial), Value::Word(salt)],
        0,
    )?;
    ctx.emit(
        "CreatedAccount",
        vec![Value::Addr(account), Value::Addr(owner), Value::Word(salt)],
    );
    Ok(vec![Value::Addr(account), Value::Word(salt)])
}

pub struct SAccount;

fn allowance_key(spender: &Address) -> Word {
    map_slot("allow", spender.as_bytes())
}

impl SAccount {
    fn require_owner(ctx: &Ctx<'_>) -> Result<(), AbortReason> {
        if ctx.caller() != load_addr(ctx, &slot("owner")) {
            return Err(AbortReason::Unauthorized);
        }
        Ok(())
    }

    /// True iff `account` was created by our token with our code.
    fn attests(ctx: &mut Ctx<'_>, account: &Address, salt: &Word, origin: ChainId) -> Result<bool, AbortReason> {
        ctx.ops(1)?;
        let token = load_addr(ctx, &slot("token"));
        Ok(derive_address(origin, &token, salt, &own_code(ctx)) == *account)
    }

    fn send(ctx: &mut Ctx<'_>, args: &[Value]) -> CallResult {
        let to = arg_addr(args, 0)?;
        let tokens = arg_u128(args, 1)?;
        let to_salt = arg_word(args, 2)?;
        let to_origin = arg_chain(args, 3)?;
        if !Self::attests(ctx, &to, &to_salt, to_origin)? {
            return Err(AbortReason::BadOrigin);
        }
        let bal = load_u128(ctx, &slot("balance"));
        if bal < tokens {
            return Err(AbortReason::InsufficientBalance);
        }
        ctx.ops(2)?;
        store_u128(ctx, slot("balance"), bal - tokens)?;
        let my_salt = ctx.sload(&slot("salt"));
        let my_origin = load_chain(ctx, &slot("origin"));
        ctx.call(
            to,
            "debit",
            &[Value::U128(tokens), Value::Word(my_salt), Value::Chain(my_origin)],
        )?;
        ctx.emit("Transfer", vec![Value::Addr(to), Value::U128(tokens)]);
        Ok(vec![])
    }
}

impl Behavior for SAccount {
    fn name(&self) -> &str {
        ACCOUNT
    }

    fn code_size(&self) -> usize {
        ACCOUNT_CODE_SIZE
    }

    /// `(owner, initial, salt)`; the creator is the token.
    fn construct(&self, ctx: &mut Ctx<'_>, args: &[Value]) -> Result<(), AbortReason> {
        let owner = arg_addr(args, 0)?;
        let initial = arg_u128(args, 1)?;
        let salt = arg_word(args, 2)?;
        let token = ctx.caller();
        let origin = ctx.chain_id();
        store_addr(ctx, slot("owner"), owner)?;
        store_addr(ctx, slot("token"), token)?;
        ctx.sstore(slot("salt"), salt)?;
        store_chain(ctx, slot("origin"), origin)?;
        store_u128(ctx, slot("balance"), initial)?;
        store_u128(ctx, slot("moved_at"), 0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(
            method,
            "balance" | "owner" | "token" | "salt" | "origin" | "moved_at" | "allowance"
        )
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "transfer" => {
                Self::require_owner(ctx)?;
                Self::send(ctx, args)
            }
            "transfer_from" => {
                let tokens = arg_u128(args, 1)?;
                let spender = ctx.caller();
                let allowed = load_u128(ctx, &allowance_key(&spender));
                if allowed < tokens {
                    return Err(AbortReason::AllowanceExceeded);
                }
                store_u128(ctx, allowance_key(&spender), allowed - tokens)?;
                Self::send(ctx, args)
            }
            "debit" => {
                let tokens = arg_u128(args, 0)?;
                let from_salt = arg_word(args, 1)?;
                let from_origin = arg_chain(args, 2)?;
                let from = ctx.caller();
                if !Self::attests(ctx, &from, &from_salt, from_origin)? {
                    return Err(AbortReason::BadOrigin);
                }
                let bal = load_u128(ctx, &slot("balance"));
                ctx.ops(1)?;
                store_u128(ctx, slot("balance"), bal + tokens)?;
                Ok(vec![])
            }
            "approve" => {
                Self::require_owner(ctx)?;
                let spender = arg_addr(args, 0)?;
                let tokens = arg_u128(args, 1)?;
                store_u128(ctx, allowance_key(&spender), tokens)?;
                ctx.emit("Approval", vec![Value::Addr(spender), Value::U128(tokens)]);
                Ok(vec![])
            }
            "allowance" => {
                let spender = arg_addr(args, 0)?;
                Ok(vec![Value::U128(load_u128(ctx, &allowance_key(&spender)))])
            }
            "balance" => Ok(vec![Value::U128(load_u128(ctx, &slot("balance")))]),
            "owner" => Ok(vec![Value::Addr(load_addr(ctx, &slot("owner")))]),
            "token" => Ok(vec![Value::Addr(load_addr(ctx, &slot("token")))]),
            "salt" => Ok(vec![Value::Word(ctx.sload(&slot("salt")))]),
            "origin" => Ok(vec![Value::Chain(load_chain(ctx, &slot("origin")))]),
            "moved_at" => Ok(vec![Value::U128(load_u128(ctx, &slot("moved_at")))]),
            _ => Err(unknown(method)),
        }
    }

    fn move_to(&self, ctx: &mut Ctx<'_>, _target: ChainId, _args: &[Value]) -> Result<(), AbortReason> {
        Self::require_owner(ctx)
    }

    fn move_finish(&self, ctx: &mut Ctx<'_>) -> Result<(), AbortReason> {
        let now = ctx.now() as u128;
        store_u128(ctx, slot("moved_at"), now)
    }
}

/// Off-chain handle on an account: what a client needs to address transfers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccountRef {
    pub address: Address,
    pub salt: Word,
    pub origin: ChainId,
}

impl AccountRef {
    pub fn salt_index(&self) -> u128 {
        word_to_u128(&self.salt)
    }

    /// Arguments of `transfer(to = self, tokens)`.
    pub fn transfer_args(&self, tokens: u128) -> Vec<Value> {
        vec![
            Value::Addr(self.address),
            Value::U128(tokens),
            Value::Word(self.salt),
            Value::Chain(self.origin),
        ]
    }
}

/// Address of the account with salt index `n` minted by `token` on `origin`.
pub fn account_address(origin: ChainId, token: &Address, n: u128) -> Address {
    derive_address(origin, token, &word_from_u128(n), &code_hash_of(ACCOUNT))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::apps::standard_registry;
    use crate::chain::ChainConfig;
    use crate::script::Script;
    use crate::vm::{BehaviorRegistry, Receipt};

    const ADMIN: Address = Address([0xad; 20]);
    const ALICE: Address = Address([0xa1; 20]);
    const BOB: Address = Address([0xb0; 20]);
    const B0: ChainId = ChainId(0);
    const B1: ChainId = ChainId(1);

    /// Pays out the caller-specified amount without checking anything.
    struct Forged;

    impl Behavior for Forged {
        fn name(&self) -> &str {
            "Forged"
        }
        fn code_size(&self) -> usize {
            10
        }
        fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
            match method {
                "debit" => Ok(vec![]),
                "steal" => {
                    let victim = arg_addr(args, 0)?;
                    ctx.call(
                        victim,
                        "debit",
                        &[Value::U128(1000), Value::Word(word_from_u128(0)), Value::Chain(B0)],
                    )
                }
                _ => Err(unknown(method)),
            }
        }
    }

    fn setup() -> (Script, Address) {
        let mut reg = standard_registry();
        reg.register(Arc::new(Forged)).unwrap();
        let cfgs = [ChainConfig::burrow_like(B0), ChainConfig::burrow_like(B1)];
        let mut s = Script::new(&cfgs, Arc::new(reg)).unwrap();
        let (token, _) = s.create(B0, ADMIN, TOKEN, [0; 32], vec![]).unwrap();
        (s, token)
    }

    fn open(s: &mut Script, token: Address, owner: Address, initial: u128) -> (AccountRef, Receipt) {
        let r = s
            .call(B0, ADMIN, token, "new_account_for", vec![Value::Addr(owner), Value::U128(initial)])
            .unwrap();
        assert!(r.is_ok(), "{r}");
        let address = r.output[0].as_addr().unwrap();
        let salt = r.output[1].as_word().unwrap();
        (
            AccountRef {
                address,
                salt,
                origin: B0,
            },
            r,
        )
    }

    fn balance(s: &Script, chain: ChainId, a: &AccountRef) -> u128 {
        s.view(chain, a.address, "balance", &[]).unwrap()[0].as_u128().unwrap()
    }

    #[test]
    fn accounts_get_consecutive_salts_and_derived_addresses() {
        let (mut s, token) = setup();
        let (a, ra) = open(&mut s, token, ALICE, 5);
        let (b, _) = open(&mut s, token, BOB, 0);
        assert_eq!(a.salt_index() + 1, b.salt_index());
        assert_ne!(a.address, b.address);
        assert_eq!(a.address, account_address(B0, &token, a.salt_index()));
        assert!(ra.event("CreatedAccount").is_some());
        assert_eq!(balance(&s, B0, &b), 0);
        let supply = s.view(B0, token, "total_supply", &[]).unwrap();
        assert_eq!(supply, vec![Value::U128(5)]);
    }

    #[test]
    fn only_owner_mints() {
        let (mut s, token) = setup();
        let r = s.call(B0, ALICE, token, "new_account", vec![Value::U128(1)]).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::Unauthorized));
        let r = s.call(B0, ALICE, token, "new_account", vec![Value::U128(0)]).unwrap();
        assert!(r.is_ok());
    }

    #[test]
    fn same_chain_transfer() {
        let (mut s, token) = setup();
        let (a, _) = open(&mut s, token, ALICE, 100);
        let (b, _) = open(&mut s, token, BOB, 0);
        let r = s.call(B0, ALICE, a.address, "transfer", b.transfer_args(10)).unwrap();
        assert!(r.is_ok(), "{r}");
        assert_eq!(r.event("Transfer").unwrap().fields, vec![Value::Addr(b.address), Value::U128(10)]);
        assert_eq!((balance(&s, B0, &a), balance(&s, B0, &b)), (90, 10));
        let r = s.call(B0, ALICE, a.address, "transfer", b.transfer_args(0)).unwrap();
        assert!(r.is_ok());
        assert_eq!((balance(&s, B0, &a), balance(&s, B0, &b)), (90, 10));
        let r = s.call(B0, BOB, a.address, "transfer", b.transfer_args(1)).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::Unauthorized));
        let r = s.call(B0, ALICE, a.address, "transfer", b.transfer_args(91)).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::InsufficientBalance));
    }

    #[test]
    fn forged_counterparties_fail_attestation() {
        let (mut s, token) = setup();
        let (a, _) = open(&mut s, token, ALICE, 100);
        let (forged, _) = s.create(B0, BOB, "Forged", [0; 32], vec![]).unwrap();
        let fake = AccountRef {
            address: forged,
            salt: word_from_u128(0),
            origin: B0,
        };
        let r = s.call(B0, ALICE, a.address, "transfer", fake.transfer_args(10)).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::BadOrigin));
        let r = s.call(B0, BOB, forged, "steal", vec![Value::Addr(a.address)]).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::BadOrigin));
        assert_eq!(balance(&s, B0, &a), 100);
    }

    #[test]
    fn allowances() {
        let (mut s, token) = setup();
        let (a, _) = open(&mut s, token, ALICE, 100);
        let (b, _) = open(&mut s, token, BOB, 0);
        let approve = |n| vec![Value::Addr(BOB), Value::U128(n)];
        assert!(s.call(B0, ALICE, a.address, "approve", approve(7)).unwrap().is_ok());
        assert!(s.call(B0, ALICE, a.address, "approve", approve(5)).unwrap().is_ok());
        let r = s.call(B0, BOB, a.address, "transfer_from", b.transfer_args(6)).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::AllowanceExceeded));
        assert!(s.call(B0, BOB, a.address, "transfer_from", b.transfer_args(5)).unwrap().is_ok());
        let left = s.view(B0, a.address, "allowance", &[Value::Addr(BOB)]).unwrap();
        assert_eq!(left, vec![Value::U128(0)]);
        assert_eq!(balance(&s, B0, &b), 5);
    }

    #[test]
    fn cross_chain_transfer_requires_move() {
        let (mut s, token) = setup();
        let (a, _) = open(&mut s, token, ALICE, 100);
        let (b, _) = open(&mut s, token, BOB, 0);
        s.move_contract(b.address, B0, B1, BOB, ADMIN).unwrap();
        let r = s.call(B0, ALICE, a.address, "transfer", b.transfer_args(10)).unwrap();
        assert_eq!(r.status.abort_reason(), Some(&AbortReason::ContractMoved));
        let out = s.move_contract(a.address, B0, B1, ALICE, ALICE).unwrap();
        let moved_at = s.view(B1, a.address, "moved_at", &[]).unwrap();
        assert_eq!(moved_at, vec![Value::U128(out.move2_time.secs() as u128)]);
        let r = s.call(B1, ALICE, a.address, "transfer", b.transfer_args(10)).unwrap();
        assert!(r.is_ok(), "{r}");
        assert_eq!((balance(&s, B1, &a), balance(&s, B1, &b)), (90, 10));
    }

    #[test]
    fn standard_registry_is_shareable() {
        let reg: BehaviorRegistry = standard_registry();
        assert!(reg.get(&code_hash_of(ACCOUNT)).is_some());
        assert_eq!(reg.code_size(&code_hash_of(TOKEN)), Some(TOKEN_CODE_SIZE));
    }
}
