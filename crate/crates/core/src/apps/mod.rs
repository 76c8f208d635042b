//! Contracts bundled with the simulator.

pub mod kitties;
pub mod movable;
pub mod scoin;
pub mod state_n;
pub mod store;

use std::sync::Arc;

use crate::protocol::{Relay, RelayFactory};
use crate::vm::BehaviorRegistry;

pub use kitties::{mix_genes, Cat, KittyCore};
pub use movable::Movable;
pub use scoin::{AccountRef, SAccount, SToken};
pub use state_n::StateN;

/// Registry holding every bundled behavior under its default code hash.
pub fn standard_registry() -> BehaviorRegistry {
    let mut r = BehaviorRegistry::new();
    r.register(Arc::new(SToken)).expect("unique");
    r.register(Arc::new(SAccount)).expect("unique");
    r.register(Arc::new(KittyCore)).expect("unique");
    r.register(Arc::new(Cat)).expect("unique");
    r.register(Arc::new(Movable)).expect("unique");
    r.register(Arc::new(Relay)).expect("unique");
    r.register(Arc::new(RelayFactory)).expect("unique");
    for n in state_n::STANDARD_SIZES {
        r.register(Arc::new(StateN::new(n))).expect("unique");
    }
    r
}
