//! Kitties trace files.
//!
//! A trace is a header line `# chainmove-trace v1` followed by one JSON
//! object per line:
//!
//! ```text
//! {"id":3,"op":{"op":"breed","dam":1,"sire":2},"produces":[],"consumes":[1,2]}
//! ```
//!
//! Objects are cats, named by integer ids. `produces` lists the objects a
//! transaction creates and `consumes` the ones whose state it reads or
//! writes. Blank lines and further `#` lines are ignored.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{Address, Word};

pub const TRACE_HEADER: &str = "# chainmove-trace v1";

pub type ObjectId = u64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceOp {
    /// Game mints a cat for `owner`. Produces the cat.
    PromoCat {
        owner: Address,
        #[serde(with = "crate::serde_words::word")]
        genes: Word,
    },
    /// The sire's owner allows `dam` to breed with `sire`. Consumes the sire;
    /// the dam is only referenced.
    ApproveSiring { sire: ObjectId, dam: ObjectId },
    /// Sent by the dam's owner. Consumes both cats.
    Breed { dam: ObjectId, sire: ObjectId },
    /// Consumes the dam, produces the kitten.
    GiveBirth { dam: ObjectId },
}

impl TraceOp {
    pub fn name(&self) -> &'static str {
        match self {
            TraceOp::PromoCat { .. } => "promo_cat",
            TraceOp::ApproveSiring { .. } => "approve_siring",
            TraceOp::Breed { .. } => "breed",
            TraceOp::GiveBirth { .. } => "give_birth",
        }
    }

    /// Objects the operation must be able to name without consuming them.
    pub fn references(&self) -> Vec<ObjectId> {
        match self {
            TraceOp::ApproveSiring { dam, .. } => vec![*dam],
            _ => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTx {
    pub id: u64,
    pub op: TraceOp,
    pub produces: Vec<ObjectId>,
    pub consumes: Vec<ObjectId>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: missing header `{TRACE_HEADER}`")]
    MissingHeader { line: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate transaction id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("line {line}: object {object} is not produced by an earlier transaction")]
    UnknownObject { line: usize, object: ObjectId },
    #[error("line {line}: object {object} produced twice")]
    DuplicateObject { line: usize, object: ObjectId },
}

/// Parses trace text and checks ids and produce-before-consume.
pub fn parse_trace(text: &str) -> Result<Vec<TraceTx>, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == TRACE_HEADER => {}
        _ => return Err(TraceError::MissingHeader { line: 1 }),
    }
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    let mut objects = BTreeSet::new();
    for (i, raw) in lines {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tx: TraceTx = serde_json::from_str(l).map_err(|e| TraceError::Malformed {
            line,
            msg: e.to_string(),
        })?;
        if !ids.insert(tx.id) {
            return Err(TraceError::DuplicateId { line, id: tx.id });
        }
        for o in tx.consumes.iter().chain(tx.op.references().iter()) {
            if !objects.contains(o) {
                return Err(TraceError::UnknownObject { line, object: *o });
            }
        }
        for o in &tx.produces {
            if !objects.insert(*o) {
                return Err(TraceError::DuplicateObject { line, object: *o });
            }
        }
        out.push(tx);
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceTx>, TraceError> {
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace(&text)
}

pub fn render_trace(trace: &[TraceTx]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for tx in trace {
        s.push_str(&serde_json::to_string(tx).expect("trace serializes"));
        s.push('\n');
    }
    s
}

pub fn write_trace(path: &Path, trace: &[TraceTx]) -> Result<(), TraceError> {
    let io_err = |source| TraceError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(render_trace(trace).as_bytes()).map_err(io_err)
}
