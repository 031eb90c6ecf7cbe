//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by instance handling, embedding, solving and the oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A matrix, coordinate list or client vector has the wrong shape.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// JSON input could not be parsed or failed schema validation.
    #[error("parse error at {path}: {reason}")]
    Parse { path: String, reason: String },

    /// The metric has no nonzero distance, so it cannot be rescaled.
    #[error("degenerate metric: no nonzero distance")]
    DegenerateMetric,

    /// A client must be connected but the open set is empty.
    #[error("no facility reachable: open set is empty but clients exist")]
    NoFacilityReachable,

    /// The candidate set passed to a nearest-neighbour query is empty.
    #[error("empty candidate set")]
    EmptyCandidateSet,

    /// Exhaustive enumeration was requested beyond its size guard.
    #[error("instance too large for exhaustive enumeration: {n} > {limit} locations (use the tree solver oracle instead)")]
    TooLargeForExhaustive { n: usize, limit: usize },

    /// A tree failed structural validation.
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    /// A vertex set that must be an antichain contains comparable vertices.
    #[error("not an antichain: vertex {child} is a descendant of vertex {ancestor}")]
    NotAntichain { ancestor: usize, child: usize },

    /// A policy string could not be interpreted.
    #[error("unknown policy: {0:?} (expected open-all, open-none, threshold:<k> or dp-solver)")]
    UnknownPolicy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
