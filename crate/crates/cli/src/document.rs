use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Self-contained result of one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    /// Command that produced the document.
    pub kind: String,
    pub verdict: String,
    pub certificate: Value,
    /// Budgets and options the command ran with.
    pub parameters: Value,
    pub tool_version: String,
    /// SHA-256 of the input bytes, or of the canonical parameters for
    /// commands that take no input file.
    pub input_digest: String,
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical bytes of a parameter object; `Value` maps keep sorted keys.
pub fn canonical_bytes(v: &Value) -> Vec<u8> {
    serde_json::to_vec(v).expect("JSON values serialize")
}

impl VerdictDocument {
    pub fn new(
        kind: &str,
        verdict: &str,
        certificate: Value,
        parameters: Value,
        input_digest: String,
    ) -> Self {
        VerdictDocument {
            kind: kind.to_string(),
            verdict: verdict.to_string(),
            certificate,
            parameters,
            tool_version: TOOL_VERSION.to_string(),
            input_digest,
        }
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }
}
