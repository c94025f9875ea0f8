use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid object pair ({0}, {1}): objects must be distinct and in range")]
    InvalidPair(u8, u8),

    #[error("unsupported object count {0} (expected 2..=5)")]
    ObjectCount(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("transition does not change any predicate")]
    EmptyTransition,

    #[error("cannot parse semantic configuration {input:?}: {reason}")]
    ParseConfig { input: String, reason: String },

    #[error("invalid grid state: {0}")]
    InvalidState(String),

    #[error("illegal move of block {block}: {reason}")]
    IllegalMove { block: u8, reason: MoveRejection },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no path from {from} to {to}")]
    NoPath { from: String, to: String },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("no candidate left to sample")]
    NothingToSample,

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Why a block cannot be moved to the requested destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveRejection {
    Occupied,
    Unsupported,
    Covered,
    OutOfBounds,
    NoChange,
    UnknownBlock,
}

impl std::fmt::Display for MoveRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MoveRejection::Occupied => "destination occupied",
            MoveRejection::Unsupported => "destination unsupported",
            MoveRejection::Covered => "block is covered",
            MoveRejection::OutOfBounds => "destination out of bounds",
            MoveRejection::NoChange => "destination equals current placement",
            MoveRejection::UnknownBlock => "no such block",
        };
        f.write_str(s)
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
