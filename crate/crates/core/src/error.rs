use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Entity,
    Relation,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Entity => f.write_str("entity"),
            TokenKind::Relation => f.write_str("relation"),
        }
    }
}

fn list_unknown(tokens: &[(TokenKind, String)]) -> String {
    tokens
        .iter()
        .map(|(kind, tok)| format!("unknown {kind}: {tok}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("training split is empty")]
    EmptyTrainingSet,

    #[error("{}", list_unknown(.0))]
    UnknownTokens(Vec<(TokenKind, String)>),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("numeric divergence: {0}")]
    NumericDivergence(String),

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Data and configuration problems, as opposed to numeric failures at run time.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyTrainingSet
                | Error::UnknownTokens(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
