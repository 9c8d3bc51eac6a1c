use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid node id {node} for a graph with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("radius must be at least 1")]
    ZeroRadius,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("infeasible regular graph: n={n}, d={d}")]
    Infeasible { n: usize, d: usize },

    #[error("generation budget exhausted after {attempts} attempts: {what}")]
    BudgetExhausted { attempts: usize, what: String },

    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("backward called on a value that was not recorded on this tape")]
    NotRecorded,

    #[error("multiset of size {size} is not below the bound {bound}")]
    MultisetTooLarge { size: usize, bound: usize },

    #[error("element {0} is not in the alphabet")]
    UnknownElement(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
