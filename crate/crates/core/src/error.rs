use thiserror::Error;

use crate::aig::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid circuit: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("library corrupt: {0}")]
    LibraryCorrupt(String),

    #[error("not a DAG: cycle through node {0}")]
    NotADag(usize),

    #[error("{0} primary inputs exceed the exhaustive cap of {cap}; use signature", cap = crate::sim::EXHAUSTIVE_CAP)]
    TooManyInputs(usize),

    #[error("input alignment is not a bijection: {0}")]
    BadAlignment(String),

    #[error("signature needs at least {min} patterns, got {0}", min = crate::sim::MIN_PATTERNS)]
    TooFewPatterns(usize),

    #[error("cannot restructure: no non-isomorphic result after {0} attempts")]
    CannotRestructure(usize),

    #[error("degenerate sample: {0} node(s) after repair")]
    DegenerateSample(usize),

    #[error("cannot form negatives: need at least 2 base circuits, got {0}")]
    CannotFormNegatives(usize),

    #[error("cannot map: {0}")]
    Unmappable(String),

    #[error("record version mismatch: expected `{expected}`, found `{found}`")]
    Version { expected: String, found: String },

    #[error("record {index}: {msg}")]
    Record { index: usize, msg: String },

    #[error("metrics undefined: {0}")]
    Undefined(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
