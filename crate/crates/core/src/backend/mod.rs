//! Completion interface shared by every agent.
//!
//! Three implementations ship: [`HttpBackend`] for OpenAI-compatible
//! `/completions` endpoints, [`ScriptedBackend`] for deterministic canned
//! answers, and [`CassetteBackend`] which records or replays any other backend.

mod cassette;
mod http;
mod scripted;

use serde::{Deserialize, Serialize};

pub use cassette::{cassette_key, CassetteBackend, CassetteMode, CassetteRecord};
pub use http::{HttpBackend, HttpReply, ReqwestTransport, RetryPolicy, Transport};
pub use scripted::{ScriptedBackend, ScriptedPass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Number of parallel completions.
    pub n: u32,
}

impl Default for SamplingParams {
    /// Sampling used for pass@k runs.
    fn default() -> Self {
        SamplingParams {
            temperature: 0.8,
            top_p: 0.95,
            max_tokens: 1024,
            n: 20,
        }
    }
}

impl SamplingParams {
    pub fn greedy() -> Self {
        SamplingParams {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 1024,
            n: 1,
        }
    }

    pub fn with_n(&self, n: u32) -> Self {
        SamplingParams { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidRequest(format!("temperature {} must be >= 0", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(BackendError::InvalidRequest(format!("top_p {} must lie in (0, 1]", self.top_p)));
        }
        if self.max_tokens == 0 || self.n == 0 {
            return Err(BackendError::InvalidRequest("max_tokens and n must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub params: SamplingParams,
    /// Task id, used for script lookup and cassette keying.
    #[serde(default)]
    pub tag: Option<String>,
    /// 1-based pass of the repair loop this request belongs to.
    #[serde(default = "first_pass")]
    pub pass_index: u32,
}

fn first_pass() -> u32 {
    1
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, params: SamplingParams) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            params,
            tag: None,
            pass_index: 1,
        }
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn at_pass(mut self, pass_index: u32) -> Self {
        self.pass_index = pass_index;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt.is_empty() {
            return Err(BackendError::InvalidRequest("prompt is empty".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub completions: Vec<String>,
    pub backend_id: String,
    pub latency_ms: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("no recorded completion for cassette key {0}")]
    CassetteMiss(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("cassette i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl BackendError {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendError::Transport(_) => "transport_error",
            BackendError::Auth(_) => "auth_error",
            BackendError::CassetteMiss(_) => "cassette_miss",
            BackendError::MalformedResponse(_) => "malformed_response",
            BackendError::InvalidRequest(_) => "invalid_request",
            BackendError::Config(_) => "backend_config",
            BackendError::Io(_) => "io_error",
        }
    }
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    /// Returns exactly `request.params.n` completions or an error.
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

pub(crate) fn check_count(request: &CompletionRequest, response: &CompletionResponse) -> Result<(), BackendError> {
    if response.completions.len() != request.params.n as usize {
        return Err(BackendError::MalformedResponse(format!(
            "asked for {} completions, got {}",
            request.params.n,
            response.completions.len()
        )));
    }
    Ok(())
}
