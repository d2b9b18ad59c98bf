//! Errors shared by the plain-text matrix/frame/witness formats.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("missing header line")]
    MissingHeader,
    #[error("malformed header: {header:?}")]
    BadHeader { header: String },
    #[error("line {line}: cannot parse token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("expected {expected} data rows, found {found}")]
    TooFewRows { expected: usize, found: usize },
    #[error("row {row}: expected {expected} entries, found {found}")]
    WrongRowLength { row: usize, expected: usize, found: usize },
}

impl ParseError {
    pub fn bad_token(line: usize, token: &str) -> Self {
        ParseError::BadToken { line, token: token.to_string() }
    }
}
