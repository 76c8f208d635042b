//! Collectible cats, one contract per cat.
//!
//! A game contract mints promotional cats. Breeding is a call from the dam to
//! the sire, so both must be active on the same chain.

use crate::apps::store::{
    arg_addr, arg_word, load_addr, load_u128, slot, store_addr, store_u128, unknown,
};
use crate::hash::{hash_parts, word_from_u128, Address, ChainId, Hash256, Word};
use crate::vm::{code_hash_of, AbortReason, Behavior, CallResult, Ctx, Value};

pub const KITTY_CORE: &str = "KittyCore";
pub const CAT: &str = "Cat";

pub const KITTY_CORE_CODE_SIZE: usize = 3000;
pub const CAT_CODE_SIZE: usize = 1600;

/// Child genes: `H(a ‖ b ‖ seed)`.
pub fn mix_genes(a: &Word, b: &Word, seed: &Hash256) -> Word {
    hash_parts(&[a, b, seed.as_bytes()]).0
}

/// Salt of the `n`-th child of `dam` (1-based).
pub fn birth_salt(dam: &Address, n: u128) -> Word {
    hash_parts(&[dam.as_bytes(), &word_from_u128(n)]).0
}

pub struct KittyCore;

impl Behavior for KittyCore {
    fn name(&self) -> &str {
        KITTY_CORE
    }

    fn code_size(&self) -> usize {
        KITTY_CORE_CODE_SIZE
    }

    fn construct(&self, ctx: &mut Ctx<'_>, _args: &[Value]) -> Result<(), AbortReason> {
        let owner = ctx.caller();
        store_addr(ctx, slot("owner"), owner)?;
        store_u128(ctx, slot("promo_count"), 0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(method, "owner" | "promo_count")
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "create_promo_cat" => {
                if ctx.caller() != load_addr(ctx, &slot("owner")) {
                    return Err(AbortReason::Unauthorized);
                }
                let owner = arg_addr(args, 0)?;
                let genes = arg_word(args, 1)?;
                let n = load_u128(ctx, &slot("promo_count"));
                store_u128(ctx, slot("promo_count"), n + 1)?;
                let game = ctx.this();
                let cat = ctx.create(
                    code_hash_of(CAT),
                    word_from_u128(n),
                    &[
                        Value::Addr(owner),
                        Value::Word(genes),
                        Value::Addr(Address::ZERO),
                        Value::Addr(Address::ZERO),
                        Value::Addr(game),
                    ],
                    0,
                )?;
                ctx.emit("PromoCat", vec![Value::Addr(cat), Value::Addr(owner)]);
                Ok(vec![Value::Addr(cat)])
            }
            "owner" => Ok(vec![Value::Addr(load_addr(ctx, &slot("owner")))]),
            "promo_count" => Ok(vec![Value::U128(load_u128(ctx, &slot("promo_count")))]),
            _ => Err(unknown(method)),
        }
    }
}

pub struct Cat;

impl Cat {
    fn require_owner(ctx: &Ctx<'_>) -> Result<(), AbortReason> {
        if ctx.caller() != load_addr(ctx, &slot("owner")) {
            return Err(AbortReason::Unauthorized);
        }
        Ok(())
    }

    fn parents(ctx: &Ctx<'_>) -> (Address, Address) {
        (load_addr(ctx, &slot("parent_a")), load_addr(ctx, &slot("parent_b")))
    }
}

/// Breeding is forbidden between a cat and itself, siblings (any shared
/// parent) and a parent and its child.
pub fn forbidden_mating(
    dam: &Address,
    dam_parents: (Address, Address),
    sire: &Address,
    sire_parents: (Address, Address),
) -> bool {
    if dam == sire {
        return true;
    }
    let known = |a: &Address| *a != Address::ZERO;
    let dp = [dam_parents.0, dam_parents.1];
    let sp = [sire_parents.0, sire_parents.1];
    if dp.iter().any(|p| known(p) && sp.contains(p)) {
        return true;
    }
    dp.contains(sire) || sp.contains(dam)
}

impl Behavior for Cat {
    fn name(&self) -> &str {
        CAT
    }

    fn code_size(&self) -> usize {
        CAT_CODE_SIZE
    }

    /// `(owner, genes, parent_a, parent_b, game)`.
    fn construct(&self, ctx: &mut Ctx<'_>, args: &[Value]) -> Result<(), AbortReason> {
        store_addr(ctx, slot("owner"), arg_addr(args, 0)?)?;
        ctx.sstore(slot("genes"), arg_word(args, 1)?)?;
        store_addr(ctx, slot("parent_a"), arg_addr(args, 2)?)?;
        store_addr(ctx, slot("parent_b"), arg_addr(args, 3)?)?;
        store_addr(ctx, slot("game"), arg_addr(args, 4)?)?;
        store_addr(ctx, slot("sire_approved"), Address::ZERO)?;
        store_addr(ctx, slot("pregnant_with"), Address::ZERO)?;
        ctx.sstore(slot("sire_genes"), [0; 32])?;
        store_u128(ctx, slot("births"), 0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(
            method,
            "owner" | "genes" | "parents" | "pregnant_with" | "sire_approved" | "births" | "game"
        )
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "approve_siring" => {
                Self::require_owner(ctx)?;
                store_addr(ctx, slot("sire_approved"), arg_addr(args, 0)?)?;
                Ok(vec![])
            }
            "transfer" => {
                Self::require_owner(ctx)?;
                store_addr(ctx, slot("owner"), arg_addr(args, 0)?)?;
                Ok(vec![])
            }
            "breed" => {
                Self::require_owner(ctx)?;
                let sire = arg_addr(args, 0)?;
                let dam = ctx.this();
                if sire == dam {
                    return Err(AbortReason::ForbiddenMating);
                }
                if load_addr(ctx, &slot("pregnant_with")) != Address::ZERO {
                    return Err(AbortReason::Rejected("already pregnant".into()));
                }
                let (pa, pb) = Self::parents(ctx);
                let out = ctx.call(
                    sire,
                    "accept_sire",
                    &[Value::Addr(pa), Value::Addr(pb)],
                )?;
                let sire_genes = out
                    .first()
                    .and_then(|v| v.as_word())
                    .ok_or(AbortReason::BadArgs)?;
                store_addr(ctx, slot("pregnant_with"), sire)?;
                ctx.sstore(slot("sire_genes"), sire_genes)?;
                ctx.emit("Pregnant", vec![Value::Addr(dam), Value::Addr(sire)]);
                Ok(vec![])
            }
            // Called by the dam; the transaction sender must own this sire or
            // the dam must hold this sire's approval.
            "accept_sire" => {
                let dam = ctx.caller();
                let dam_parents = (arg_addr(args, 0)?, arg_addr(args, 1)?);
                let me = ctx.this();
                let owner = load_addr(ctx, &slot("owner"));
                let approved = load_addr(ctx, &slot("sire_approved"));
                if ctx.origin() != owner && approved != dam {
                    return Err(AbortReason::Unauthorized);
                }
                if forbidden_mating(&dam, dam_parents, &me, Self::parents(ctx)) {
                    return Err(AbortReason::ForbiddenMating);
                }
                store_addr(ctx, slot("sire_approved"), Address::ZERO)?;
                Ok(vec![Value::Word(ctx.sload(&slot("genes")))])
            }
            "give_birth" => {
                let sire = load_addr(ctx, &slot("pregnant_with"));
                if sire == Address::ZERO {
                    return Err(AbortReason::NotPregnant);
                }
                let dam = ctx.this();
                let births = load_u128(ctx, &slot("births")) + 1;
                store_u128(ctx, slot("births"), births)?;
                let genes = mix_genes(
                    &ctx.sload(&slot("genes")),
                    &ctx.sload(&slot("sire_genes")),
                    &ctx.block_seed(),
                );
                let owner = load_addr(ctx, &slot("owner"));
                let game = load_addr(ctx, &slot("game"));
                store_addr(ctx, slot("pregnant_with"), Address::ZERO)?;
                ctx.sstore(slot("sire_genes"), [0; 32])?;
                let child = ctx.create(
                    code_hash_of(CAT),
                    birth_salt(&dam, births),
                    &[
                        Value::Addr(owner),
                        Value::Word(genes),
                        Value::Addr(dam),
                        Value::Addr(sire),
                        Value::Addr(game),
                    ],
                    0,
                )?;
                ctx.emit("Birth", vec![Value::Addr(child), Value::Addr(dam), Value::Addr(sire)]);
                Ok(vec![Value::Addr(child)])
            }
            "owner" => Ok(vec![Value::Addr(load_addr(ctx, &slot("owner")))]),
            "genes" => Ok(vec![Value::Word(ctx.sload(&slot("genes")))]),
            "parents" => {
                let (a, b) = Self::parents(ctx);
                Ok(vec![Value::Addr(a), Value::Addr(b)])
            }
            "pregnant_with" => Ok(vec![Value::Addr(load_addr(ctx, &slot("pregnant_with")))]),
            "sire_approved" => Ok(vec![Value::Addr(load_addr(ctx, &slot("sire_approved")))]),
            "births" => Ok(vec![Value::U128(load_u128(ctx, &slot("births")))]),
            "game" => Ok(vec![Value::Addr(load_addr(ctx, &slot("game")))]),
            _ => Err(unknown(method)),
        }
    }

    fn move_to(&self, ctx: &mut Ctx<'_>, _target: ChainId, _args: &[Value]) -> Result<(), AbortReason> {
        Self::require_owner(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: u8) -> Address {
        Address([n; 20])
    }

    #[test]
    fn mating_rules() {
        let none = (Address::ZERO, Address::ZERO);
        assert!(forbidden_mating(&a(1), none, &a(1), none));
        assert!(!forbidden_mating(&a(1), none, &a(2), none));
        // half siblings
        assert!(forbidden_mating(&a(3), (a(1), a(2)), &a(4), (a(5), a(2))));
        // parent and child, both directions
        assert!(forbidden_mating(&a(3), (a(1), a(2)), &a(1), none));
        assert!(forbidden_mating(&a(1), none, &a(3), (a(1), a(2))));
        // promo cats share the NONE sentinel but are unrelated
        assert!(!forbidden_mating(&a(7), none, &a(8), none));
    }

    #[test]
    fn mix_is_order_sensitive() {
        let s = Hash256([5; 32]);
        assert_ne!(mix_genes(&[1; 32], &[2; 32], &s), mix_genes(&[2; 32], &[1; 32], &s));
        assert_eq!(mix_genes(&[1; 32], &[2; 32], &s), mix_genes(&[1; 32], &[2; 32], &s));
    }
}
