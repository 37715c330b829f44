//! Out-of-process execution of generated programs.
//!
//! The sandbox writes the candidate to a fresh temporary directory and invokes
//! an external runner, which answers with a single JSON [`Envelope`] on stdout.
//! The runner and everything it spawns live in their own process group, which
//! is killed once the run is over. There is no filesystem or network isolation
//! beyond the throwaway working directory.

mod envelope;
mod execute;
pub mod stub;
mod trace;

use serde::{Deserialize, Serialize};

pub use envelope::{Envelope, EnvelopeError};
pub use execute::{Sandbox, OUTPUT_CAP_BYTES, TRUNCATION_MARKER};
pub use trace::{parse_error_trace, stderr_tail, STDERR_TAIL_CHARS};

pub const FILE_PLACEHOLDER: &str = "{file}";
pub const TIMEOUT_PLACEHOLDER: &str = "{timeout}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Error,
    Timeout,
    InfraFail,
}

impl ExecStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecStatus::Ok => "ok",
            ExecStatus::Error => "error",
            ExecStatus::Timeout => "timeout",
            ExecStatus::InfraFail => "infra_fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedError {
    pub error_type: String,
    pub message: String,
    /// Deepest `(file, line)` frame of the traceback.
    pub last_frame: Option<(String, u32)>,
}

impl std::fmt::Display for ParsedError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.message.is_empty() {
            write!(f, "{}", self.error_type)
        } else {
            write!(f, "{}: {}", self.error_type, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
    pub parsed_error: Option<ParsedError>,
}

impl ExecutionResult {
    pub fn infra_fail(reason: impl Into<String>, duration_ms: u64) -> Self {
        ExecutionResult {
            status: ExecStatus::InfraFail,
            exit_code: None,
            stdout: String::new(),
            stderr: reason.into(),
            duration_ms,
            parsed_error: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ExecStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutorConfig {
    /// Runner argv. `{file}` must appear exactly once and is replaced with the
    /// candidate path; `{timeout}` is replaced with `timeout_s`.
    pub command: Vec<String>,
    pub timeout_s: f64,
    /// Environment variables passed through to the runner; all others are cleared.
    pub env_allowlist: Vec<String>,
    pub file_name: String,
    /// Upper bound on concurrent executions; 0 means the number of logical CPUs.
    pub max_concurrent: usize,
    /// Extra wall-clock time granted to the runner past `timeout_s` before the
    /// sandbox kills it.
    pub grace_s: f64,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            command: vec![
                "qforge-runner".into(),
                FILE_PLACEHOLDER.into(),
                "--timeout".into(),
                TIMEOUT_PLACEHOLDER.into(),
            ],
            timeout_s: 30.0,
            env_allowlist: ["PATH", "HOME", "LANG", "LC_ALL", "PYTHONPATH", "VIRTUAL_ENV", "TMPDIR"]
                .map(String::from)
                .to_vec(),
            file_name: "candidate.py".into(),
            max_concurrent: 0,
            grace_s: 1.0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid executor config: {0}")]
pub struct ConfigError(pub String);

impl ExecutorConfig {
    /// Runner invoked as `<runner> {file} --timeout {timeout}`.
    pub fn with_runner(runner: impl Into<String>) -> Self {
        let mut config = Self::default();
        config.command[0] = runner.into();
        config
    }

    pub fn timeout(mut self, seconds: f64) -> Self {
        self.timeout_s = seconds;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(ConfigError(format!("timeout_s must be positive, got {}", self.timeout_s)));
        }
        if !(self.grace_s >= 0.0 && self.grace_s.is_finite()) {
            return Err(ConfigError(format!("grace_s must be non-negative, got {}", self.grace_s)));
        }
        if self.command.is_empty() {
            return Err(ConfigError("command is empty".into()));
        }
        let count: usize = self.command.iter().map(|a| a.matches(FILE_PLACEHOLDER).count()).sum();
        if count != 1 {
            return Err(ConfigError(format!("command must contain {FILE_PLACEHOLDER} exactly once, found {count}")));
        }
        if self.file_name.is_empty() || self.file_name.contains('/') {
            return Err(ConfigError(format!("bad file name `{}`", self.file_name)));
        }
        Ok(())
    }

    pub fn argv(&self, file: &str) -> Vec<String> {
        let timeout = format_timeout(self.timeout_s);
        self.command
            .iter()
            .map(|a| a.replace(FILE_PLACEHOLDER, file).replace(TIMEOUT_PLACEHOLDER, &timeout))
            .collect()
    }

    pub fn concurrency(&self) -> usize {
        if self.max_concurrent > 0 {
            self.max_concurrent
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

fn format_timeout(s: f64) -> String {
    if s.fract() == 0.0 {
        format!("{}", s as u64)
    } else {
        format!("{s}")
    }
}
