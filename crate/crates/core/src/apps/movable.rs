//! Minimal contract with an owner-restricted move policy.
//!
//! Only the owner may move it, and at most once every three days. A contract
//! that never moved may move at any time.

use crate::apps::store::{load_addr, load_u128, slot, store_addr, store_u128, unknown};
use crate::hash::ChainId;
use crate::vm::{AbortReason, Behavior, CallResult, Ctx, Value};

pub const MOVABLE: &str = "Movable";
pub const MOVABLE_CODE_SIZE: usize = 300;
pub const MOVE_COOLDOWN_SECS: u64 = 3 * 24 * 3600;

pub struct Movable;

impl Behavior for Movable {
    fn name(&self) -> &str {
        MOVABLE
    }

    fn code_size(&self) -> usize {
        MOVABLE_CODE_SIZE
    }

    fn construct(&self, ctx: &mut Ctx<'_>, _args: &[Value]) -> Result<(), AbortReason> {
        let owner = ctx.caller();
        store_addr(ctx, slot("owner"), owner)?;
        store_u128(ctx, slot("moved_at"), 0)?;
        store_u128(ctx, slot("counter"), 0)
    }

    fn is_view(&self, method: &str) -> bool {
        matches!(method, "get" | "moved_at")
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, _args: &[Value]) -> CallResult {
        match method {
            "poke" => {
                let n = load_u128(ctx, &slot("counter")) + 1;
                ctx.ops(1)?;
                store_u128(ctx, slot("counter"), n)?;
                Ok(vec![Value::U128(n)])
            }
            "get" => Ok(vec![Value::U128(load_u128(ctx, &slot("counter")))]),
            "moved_at" => Ok(vec![Value::U128(load_u128(ctx, &slot("moved_at")))]),
            _ => Err(unknown(method)),
        }
    }

    fn move_to(&self, ctx: &mut Ctx<'_>, _target: ChainId, _args: &[Value]) -> Result<(), AbortReason> {
        if ctx.caller() != load_addr(ctx, &slot("owner")) {
            return Err(AbortReason::Unauthorized);
        }
        let moved_at = load_u128(ctx, &slot("moved_at")) as u64;
        if moved_at != 0 && ctx.now().saturating_sub(moved_at) < MOVE_COOLDOWN_SECS {
            return Err(AbortReason::Rejected("moved too recently".into()));
        }
        Ok(())
    }

    fn move_finish(&self, ctx: &mut Ctx<'_>) -> Result<(), AbortReason> {
        let now = ctx.now() as u128;
        store_u128(ctx, slot("moved_at"), now)
    }
}
