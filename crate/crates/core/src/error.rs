use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the toolkit.
///
/// The distinction matters to callers: `Parse` and `Definition` mean the input
/// artifact is unusable, `Precondition` means a procedure was invoked on a
/// machine that does not satisfy its contract (for instance evaluating a
/// non-functional machine), `Resource` means a search hit a configured cap and
/// no verdict was produced, and `Domain` means a streamed input left the
/// domain of the evaluated function.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed machine definition (undeclared identifiers, kind constraint
    /// violations, ill-formed outputs, ...).
    #[error("definition error: {0}")]
    Definition(String),

    /// Syntax error in a textual artifact, with 1-based position.
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A procedure precondition failed.
    #[error("precondition violation: {0}")]
    Precondition(String),

    /// A search exceeded a resource cap; no verdict.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// The consumed input admits no accepting continuation.
    #[error("input left the domain after {consumed} letters")]
    Domain { consumed: usize },

    /// Evaluator pathology guard (per-step emission or summary growth cap).
    #[error("evaluator diagnostic: {0}")]
    Diagnostic(String),
}
