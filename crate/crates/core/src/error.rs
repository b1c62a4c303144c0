use thiserror::Error;

use crate::profile::VertexId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid money amount {0:?}")]
    InvalidMoney(String),

    #[error("negative bid {bid} for vertex {id}")]
    NegativeBid { id: VertexId, bid: String },

    #[error("vertex {id} referenced by {context} has no report")]
    DanglingId { id: VertexId, context: String },

    #[error("duplicate report for vertex {0}")]
    DuplicateReport(VertexId),

    #[error("the seller {0} must not carry a report")]
    SellerReport(VertexId),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("infeasible attack arc {from} -> {to}: target is neither an identity nor a true neighbor of {attacker}")]
    InfeasibleArc { attacker: VertexId, from: VertexId, to: VertexId },

    #[error("invalid attack: {0}")]
    InvalidAttack(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("empty sample group {0}")]
    EmptyGroup(String),

    #[error("malformed profile document: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
