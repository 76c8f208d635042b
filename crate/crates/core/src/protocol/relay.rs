//! Cross-chain value transfer built on contract moves.
//!
//! A client sends native currency to the factory on its origin chain. The
//! factory creates a relay contract holding that amount and moves it to the
//! target chain in the same transaction. After Move2, the beneficiary mints
//! an equal number of tokens inside the relay on the target chain. To redeem,
//! holders burn the tokens, the relay moves back, and the beneficiary
//! releases the locked currency on the origin chain.

use crate::apps::store::{
    arg_addr, arg_chain, arg_u128, load_addr, load_bool, load_chain, load_u128, map_slot, slot,
    store_addr, store_bool, store_chain, store_u128, unknown,
};
use crate::hash::{word_from_u128, ChainId};
use crate::vm::{code_hash_of, AbortReason, Behavior, CallResult, Ctx, Value};

pub const RELAY: &str = "Relay";
pub const RELAY_FACTORY: &str = "RelayFactory";

fn tokens_key(holder: &crate::hash::Address) -> [u8; 32] {
    map_slot("tokens", holder.as_bytes())
}

pub struct RelayFactory;

impl Behavior for RelayFactory {
    fn name(&self) -> &str {
        RELAY_FACTORY
    }

    fn code_size(&self) -> usize {
        1200
    }

    /// `create(beneficiary, target)` with the amount to lock attached.
    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "create" => {
                let beneficiary = arg_addr(args, 0)?;
                let target = arg_chain(args, 1)?;
                let amount = ctx.value();
                if amount == 0 {
                    return Err(AbortReason::Rejected("nothing to lock".into()));
                }
                let counter = load_u128(ctx, &slot("counter"));
                store_u128(ctx, slot("counter"), counter + 1)?;
                let relay = ctx.create(
                    code_hash_of(RELAY),
                    word_from_u128(counter),
                    &[Value::Addr(beneficiary)],
                    amount,
                )?;
                ctx.move_contract(relay, target, &[])?;
                ctx.emit("RelayCreated", vec![Value::Addr(relay), Value::Chain(target)]);
                Ok(vec![Value::Addr(relay)])
            }
            _ => Err(unknown(method)),
        }
    }
}

pub struct Relay;

impl Relay {
    fn require_beneficiary(ctx: &Ctx<'_>) -> Result<(), AbortReason> {
        if ctx.caller() != load_addr(ctx, &slot("beneficiary")) {
            return Err(AbortReason::NotBeneficiary);
        }
        Ok(())
    }

    fn debit_tokens(ctx: &mut Ctx<'_>, amount: u128) -> Result<(), AbortReason> {
        let holder = ctx.caller();
        let bal = load_u128(ctx, &tokens_key(&holder));
        if bal < amount {
            return Err(AbortReason::InsufficientBalance);
        }
        store_u128(ctx, tokens_key(&holder), bal - amount)
    }
}

impl Behavior for Relay {
    fn name(&self) -> &str {
        RELAY
    }

    fn code_size(&self) -> usize {
        900
    }

    fn construct(&self, ctx: &mut Ctx<'_>, args: &[Value]) -> Result<(), AbortReason> {
        let beneficiary = arg_addr(args, 0)?;
        let factory = ctx.caller();
        let origin = ctx.chain_id();
        let locked = ctx.value();
        store_addr(ctx, slot("beneficiary"), beneficiary)?;
        store_addr(ctx, slot("factory"), factory)?;
        store_chain(ctx, slot("origin_chain"), origin)?;
        store_u128(ctx, slot("locked"), locked)?;
        store_bool(ctx, slot("minted"), false)?;
        store_u128(ctx, slot("issued"), 0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(
            method,
            "balance_of" | "issued" | "locked" | "minted" | "beneficiary" | "origin_chain"
        )
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "mint" => {
                Self::require_beneficiary(ctx)?;
                if ctx.chain_id() == load_chain(ctx, &slot("origin_chain")) {
                    return Err(AbortReason::Rejected("mint only away from origin".into()));
                }
                if load_bool(ctx, &slot("minted")) {
                    return Err(AbortReason::AlreadyMinted);
                }
                let locked = load_u128(ctx, &slot("locked"));
                let holder = ctx.caller();
                store_bool(ctx, slot("minted"), true)?;
                store_u128(ctx, slot("issued"), locked)?;
                store_u128(ctx, tokens_key(&holder), locked)?;
                ctx.emit("Minted", vec![Value::Addr(holder), Value::U128(locked)]);
                Ok(vec![Value::U128(locked)])
            }
            "transfer" => {
                let to = arg_addr(args, 0)?;
                let amount = arg_u128(args, 1)?;
                Self::debit_tokens(ctx, amount)?;
                let bal = load_u128(ctx, &tokens_key(&to));
                store_u128(ctx, tokens_key(&to), bal + amount)?;
                Ok(vec![])
            }
            "burn" => {
                let amount = arg_u128(args, 0)?;
                Self::debit_tokens(ctx, amount)?;
                let issued = load_u128(ctx, &slot("issued"));
                store_u128(ctx, slot("issued"), issued - amount)?;
                ctx.emit("Burned", vec![Value::U128(amount)]);
                Ok(vec![])
            }
            "release" => {
                Self::require_beneficiary(ctx)?;
                if ctx.chain_id() != load_chain(ctx, &slot("origin_chain")) {
                    return Err(AbortReason::ForeignCurrency);
                }
                if load_u128(ctx, &slot("issued")) != 0 {
                    return Err(AbortReason::Rejected("tokens outstanding".into()));
                }
                let locked = load_u128(ctx, &slot("locked"));
                let to = load_addr(ctx, &slot("beneficiary"));
                store_u128(ctx, slot("locked"), 0)?;
                ctx.pay_client(to, locked)?;
                ctx.emit("Released", vec![Value::Addr(to), Value::U128(locked)]);
                Ok(vec![Value::U128(locked)])
            }
            "balance_of" => {
                let holder = arg_addr(args, 0)?;
                Ok(vec![Value::U128(load_u128(ctx, &tokens_key(&holder)))])
            }
            "issued" => Ok(vec![Value::U128(load_u128(ctx, &slot("issued")))]),
            "locked" => Ok(vec![Value::U128(load_u128(ctx, &slot("locked")))]),
            "minted" => Ok(vec![Value::Bool(load_bool(ctx, &slot("minted")))]),
            "beneficiary" => Ok(vec![Value::Addr(load_addr(ctx, &slot("beneficiary")))]),
            "origin_chain" => Ok(vec![Value::Chain(load_chain(ctx, &slot("origin_chain")))]),
            _ => Err(unknown(method)),
        }
    }

    fn move_to(&self, ctx: &mut Ctx<'_>, _target: ChainId, _args: &[Value]) -> Result<(), AbortReason> {
        let caller = ctx.caller();
        if caller == load_addr(ctx, &slot("factory")) || caller == load_addr(ctx, &slot("beneficiary")) {
            Ok(())
        } else {
            Err(AbortReason::Unauthorized)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::apps::standard_registry;
    use crate::chain::ChainConfig;
    use crate::hash::Address;
    use crate::script::Script;
    use crate::vm::{Receipt, Transaction};

    const ADMIN: Address = Address([0xad; 20]);
    const ALICE: Address = Address([0xa1; 20]);
    const BOB: Address = Address([0xb0; 20]);
    const B0: ChainId = ChainId(0);
    const B1: ChainId = ChainId(1);

    fn abort(r: &Receipt) -> Option<&AbortReason> {
        r.status.abort_reason()
    }

    fn native(s: &Script, chain: ChainId, a: &Address) -> u128 {
        s.net.chain(chain).state().account(a).balance
    }

    #[test]
    fn lock_mint_burn_release() {
        let cfgs = [ChainConfig::burrow_like(B0), ChainConfig::burrow_like(B1)];
        let mut net = crate::chain::Network::new(&cfgs, Arc::new(standard_registry())).unwrap();
        net.chain_mut(B0).genesis_fund(ALICE, 1_000).unwrap();
        net.seal_all().unwrap();
        let mut s = Script::from_network(net);

        let (factory, _) = s.create(B0, ADMIN, RELAY_FACTORY, [0; 32], vec![]).unwrap();
        let tx = Transaction::call(ALICE, 0, factory, "create", vec![Value::Addr(ALICE), Value::Chain(B1)])
            .with_value(400);
        let r = s.send(B0, tx).unwrap();
        assert!(r.is_ok(), "{r}");
        let relay = r.output[0].as_addr().unwrap();
        assert_eq!(native(&s, B0, &ALICE), 600);
        let rec = s.net.chain(B0).state().contract(&relay).unwrap().clone();
        assert_eq!((rec.location, rec.origin, rec.balance), (B1, B0, 400));

        let p = s.net.chain(B0).config().p;
        s.net.advance_blocks(B0, p).unwrap();
        let payload = crate::protocol::build_move2(s.net.chain(B0), &relay).unwrap();
        assert!(s.send(B1, Transaction::move2(BOB, 0, payload)).unwrap().is_ok());

        let call = |m: &str, args| Transaction::call(ALICE, 0, relay, m, args);
        assert_eq!(abort(&s.send(B1, Transaction::call(BOB, 0, relay, "mint", vec![])).unwrap()), Some(&AbortReason::NotBeneficiary));
        assert!(s.send(B1, call("mint", vec![])).unwrap().is_ok());
        assert_eq!(abort(&s.send(B1, call("mint", vec![])).unwrap()), Some(&AbortReason::AlreadyMinted));
        assert!(s.send(B1, call("transfer", vec![Value::Addr(BOB), Value::U128(100)])).unwrap().is_ok());
        assert_eq!(s.view(B1, relay, "balance_of", &[Value::Addr(BOB)]).unwrap(), vec![Value::U128(100)]);
        // value is foreign here
        assert_eq!(abort(&s.send(B1, call("release", vec![])).unwrap()), Some(&AbortReason::ForeignCurrency));

        assert!(s.send(B1, Transaction::call(BOB, 0, relay, "burn", vec![Value::U128(100)])).unwrap().is_ok());
        assert!(s.send(B1, call("burn", vec![Value::U128(300)])).unwrap().is_ok());
        s.move_contract(relay, B1, B0, ALICE, BOB).unwrap();
        let r = s.send(B0, call("release", vec![])).unwrap();
        assert!(r.is_ok(), "{r}");
        assert_eq!(native(&s, B0, &ALICE), 1_000);
    }

    #[test]
    fn release_blocked_while_tokens_outstanding() {
        let cfgs = [ChainConfig::burrow_like(B0), ChainConfig::burrow_like(B1)];
        let mut net = crate::chain::Network::new(&cfgs, Arc::new(standard_registry())).unwrap();
        net.chain_mut(B0).genesis_fund(ALICE, 50).unwrap();
        net.seal_all().unwrap();
        let mut s = Script::from_network(net);
        let (factory, _) = s.create(B0, ADMIN, RELAY_FACTORY, [0; 32], vec![]).unwrap();
        let tx = Transaction::call(ALICE, 0, factory, "create", vec![Value::Addr(ALICE), Value::Chain(B1)])
            .with_value(50);
        let relay = s.send(B0, tx).unwrap().output[0].as_addr().unwrap();
        let p = s.net.chain(B0).config().p;
        s.net.advance_blocks(B0, p).unwrap();
        let payload = crate::protocol::build_move2(s.net.chain(B0), &relay).unwrap();
        assert!(s.send(B1, Transaction::move2(BOB, 0, payload)).unwrap().is_ok());
        assert!(s.send(B1, Transaction::call(ALICE, 0, relay, "mint", vec![])).unwrap().is_ok());
        s.move_contract(relay, B1, B0, ALICE, BOB).unwrap();
        let r = s.send(B0, Transaction::call(ALICE, 0, relay, "release", vec![])).unwrap();
        assert_eq!(abort(&r), Some(&AbortReason::Rejected("tokens outstanding".into())));
    }
}
