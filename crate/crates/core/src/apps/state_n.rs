//! Payload contracts holding a fixed number of storage words.

use crate::apps::store::unknown;
use crate::hash::{hash_parts, word_from_u128, word_to_u128, Word};
use crate::vm::{AbortReason, Behavior, CallResult, Ctx, Value};

pub const STATE_N_CODE_SIZE: usize = 400;

/// Sizes registered by [`crate::apps::standard_registry`].
pub const STANDARD_SIZES: [usize; 4] = [0, 1, 10, 100];

pub fn state_n_name(n: usize) -> String {
    format!("State{n}")
}

/// Value stored at key `i`.
pub fn state_word(i: usize) -> Word {
    hash_parts(&[b"state", &(i as u64).to_be_bytes()]).0
}

/// Writes `n` distinct words on construction. No owner; anyone may move it.
pub struct StateN {
    n: usize,
    name: String,
}

impl StateN {
    pub fn new(n: usize) -> Self {
        StateN {
            n,
            name: state_n_name(n),
        }
    }

    pub fn words(&self) -> usize {
        self.n
    }
}

impl Behavior for StateN {
    fn name(&self) -> &str {
        &self.name
    }

    fn code_size(&self) -> usize {
        STATE_N_CODE_SIZE
    }

    fn construct(&self, ctx: &mut Ctx<'_>, _args: &[Value]) -> Result<(), AbortReason> {
        for i in 0..self.n {
            ctx.sstore(word_from_u128(i as u128), state_word(i))?;
        }
        Ok(())
    }

    fn is_view(&self, method: &str) -> bool {
        method == "get"
    }

    fn call(&self, ctx: &mut Ctx<'_>, method: &str, args: &[Value]) -> CallResult {
        match method {
            "get" => {
                let key = args
                    .first()
                    .and_then(|v| v.as_word())
                    .ok_or(AbortReason::BadArgs)?;
                if word_to_u128(&key) >= self.n as u128 {
                    return Err(AbortReason::BadArgs);
                }
                Ok(vec![Value::Word(ctx.sload(&key))])
            }
            _ => Err(unknown(method)),
        }
    }
}
