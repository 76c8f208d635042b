//! Workloads: closed-loop token clients and dependency-ordered trace replay.

pub mod closed_loop;
pub mod dag;
pub mod replay;
pub mod trace;
pub mod tracegen;

pub use closed_loop::{ClosedLoop, ClosedLoopStats, ScoinWorld};
pub use dag::{build_dag, DagError, DependencyDag};
pub use replay::{replay, ReplayConfig, ReplayStats};
pub use trace::{load_trace, parse_trace, render_trace, write_trace, TraceError, TraceOp, TraceTx};
pub use tracegen::{generate, TraceParams};
