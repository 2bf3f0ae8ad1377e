use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("predicate `{pred}` has arity {expected}, found {found} arguments")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },

    /// Lifted evaluation reached a sub-query with no applicable rule.
    #[error("query is not liftable (no rule applies to `{0}`)")]
    UnsafeQuery(String),

    #[error("query is not inversion-free: {0}")]
    NotInversionFree(String),

    #[error("resource limit exceeded: {what} needs {needed}, limit is {limit}")]
    ResourceLimit {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("invalid probability {value} for {context}")]
    InvalidProbability { value: f64, context: String },

    #[error("completion overlaps existing tuple {0}")]
    CompletionOverlap(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
