//! Error types shared across the crate.

use thiserror::Error;

/// Errors returned by state constructors, step maps and solvers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BellError {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The surviving pair has probability zero; the map is undefined.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// The request exceeds a hard resource bound (e.g. oracle tuple count).
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    /// A textual input (step grammar, state spec) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, BellError>;
