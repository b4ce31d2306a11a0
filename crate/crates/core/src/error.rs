use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A node put more than `B` bits on one edge in one round.
    #[error("bit budget exceeded in round {round}: {from} -> {to} carried {bits} bits (B = {budget})")]
    BudgetViolation {
        round: u64,
        from: NodeId,
        to: NodeId,
        bits: u64,
        budget: u64,
    },

    #[error("word value {value} does not fit in {word_bits} bits")]
    WordOverflow { value: u64, word_bits: u32 },

    #[error("round cap of {0} rounds exceeded")]
    RoundCap(u64),

    #[error("node {node} has no entry for source {source_id}")]
    MissingEntry { node: NodeId, source_id: u64 },

    #[error("node {node} is not in the tree cell of the destination label")]
    NotInCell { node: NodeId },

    #[error("routing from {from} to {to} did not make progress at {at}")]
    RoutingCycle { from: NodeId, to: NodeId, at: NodeId },

    #[error("validation failed after {attempts} attempts: {reason}")]
    RetriesExhausted { attempts: u32, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
