//! Command-line front end: input parsing with JSON-pointer errors, verdict
//! documents with input digests, and certificate re-verification.

pub mod app;
pub mod corpus;
pub mod document;

pub use app::{run, Cli, Output, Status};
pub use document::VerdictDocument;

use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("input digest {actual} does not match the document's {expected}")]
    DigestMismatch { expected: String, actual: String },
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn invalid(e: impl std::fmt::Display) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn escape_token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// RFC 6901 pointer for a deserialization path.
pub fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&escape_token(key)),
            Segment::Enum { variant } => out.push_str(&escape_token(variant)),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Deserialize a whole document, reporting schema errors by JSON pointer.
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let pointer = json_pointer(e.path());
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::Syntax(inner.to_string())
        } else {
            CliError::Schema {
                pointer,
                message: inner.to_string(),
            }
        }
    })?;
    de.end().map_err(|e| CliError::Syntax(e.to_string()))?;
    Ok(value)
}

pub fn read_file(path: &std::path::Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
