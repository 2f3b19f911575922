//! Error taxonomy shared by all modules.
//!
//! The groups matter to callers: the CLI maps parse/reference/validation and
//! domain errors to exit code 3 and everything else (runtime failures) to 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A file or inline document could not be parsed. Names file and line.
    #[error("parse error in {file}, line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    /// Structurally parseable input that violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A cross-reference does not resolve (edge → node, zone → cell, ...).
    #[error("reference error: {0}")]
    Reference(String),

    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation illegal in the current state (duplicate install, step after done).
    #[error("state error: {0}")]
    State(String),

    /// Fitting is impossible on the given data (e.g. single-class labels).
    #[error("fit error: {0}")]
    Fit(String),

    /// Iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
    },

    /// A size guard was exceeded (e.g. explicit MDP too large to enumerate).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors the CLI treats as bad input (exit 3) rather than
    /// runtime failure (exit 4).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Reference(_) | Error::Domain(_)
        )
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
