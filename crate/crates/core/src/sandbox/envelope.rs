use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::ExecStatus;

/// The single JSON object a runner prints on stdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub status: ExecStatus,
    pub exit_code: Option<i32>,
    pub stdout_b64: String,
    pub stderr_b64: String,
    pub duration_ms: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("runner output is not an envelope: {0}")]
    Malformed(String),
    #[error("envelope is inconsistent: {0}")]
    Inconsistent(String),
}

impl Envelope {
    pub fn new(status: ExecStatus, exit_code: Option<i32>, stdout: &[u8], stderr: &[u8], duration_ms: u64) -> Self {
        Envelope {
            status,
            exit_code,
            stdout_b64: STANDARD.encode(stdout),
            stderr_b64: STANDARD.encode(stderr),
            duration_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }

    /// Parses runner stdout, which must hold exactly one JSON object (surrounding
    /// whitespace allowed), and checks the status/exit-code rules.
    pub fn parse(text: &str) -> Result<Self, EnvelopeError> {
        let env: Envelope = serde_json::from_str(text.trim()).map_err(|e| EnvelopeError::Malformed(e.to_string()))?;
        env.check()?;
        Ok(env)
    }

    pub fn check(&self) -> Result<(), EnvelopeError> {
        let bad = |why: &str| Err(EnvelopeError::Inconsistent(format!("{why} (status {}, exit_code {:?})", self.status.as_str(), self.exit_code)));
        match (self.status, self.exit_code) {
            (ExecStatus::Ok, Some(0)) => {}
            (ExecStatus::Ok, _) => return bad("ok requires exit_code 0"),
            (ExecStatus::Error, Some(0)) => return bad("error with exit_code 0"),
            (ExecStatus::Timeout, Some(_)) => return bad("timeout must not carry an exit code"),
            _ => {}
        }
        self.stdout_bytes()?;
        self.stderr_bytes()?;
        Ok(())
    }

    pub fn stdout_bytes(&self) -> Result<Vec<u8>, EnvelopeError> {
        STANDARD
            .decode(&self.stdout_b64)
            .map_err(|e| EnvelopeError::Malformed(format!("stdout_b64: {e}")))
    }

    pub fn stderr_bytes(&self) -> Result<Vec<u8>, EnvelopeError> {
        STANDARD
            .decode(&self.stderr_b64)
            .map_err(|e| EnvelopeError::Malformed(format!("stderr_b64: {e}")))
    }
}
