use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{check_count, Backend, BackendError, CompletionRequest, CompletionResponse};

pub const ENV_API_BASE: &str = "QFORGE_API_BASE";
pub const ENV_API_KEY: &str = "QFORGE_API_KEY";
pub const ENV_MODEL: &str = "QFORGE_MODEL";

/// Raw HTTP reply as seen by [`HttpBackend`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One POST of a JSON body. Errors are connection-level failures only; HTTP
/// status codes come back inside [`HttpReply`].
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &serde_json::Value) -> Result<HttpReply, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &serde_json::Value) -> Result<HttpReply, String> {
        let mut req = self.client.post(url).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

/// Client for an OpenAI-compatible `POST {base}/completions` endpoint.
pub struct HttpBackend {
    base_url: String,
    api_key: Option<String>,
    model: String,
    retry: RetryPolicy,
    transport: Box<dyn Transport>,
    id: String,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    #[serde(default)]
    index: Option<u32>,
    text: String,
}

impl HttpBackend {
    pub fn new(base_url: &str, api_key: Option<String>, model: &str, transport: Box<dyn Transport>) -> Self {
        let base_url = base_url.trim_end_matches('/').to_string();
        HttpBackend {
            id: format!("http:{model}"),
            base_url,
            api_key,
            model: model.to_string(),
            retry: RetryPolicy::default(),
            transport,
        }
    }

    /// Reads `QFORGE_API_BASE`, `QFORGE_API_KEY` and `QFORGE_MODEL`.
    pub fn from_env() -> Result<Self, BackendError> {
        let base = std::env::var(ENV_API_BASE).map_err(|_| BackendError::Config(format!("{ENV_API_BASE} is not set")))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| BackendError::Config(format!("{ENV_MODEL} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        let transport = ReqwestTransport::new(Duration::from_secs(300))?;
        Ok(Self::new(&base, key, &model, Box::new(transport)))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> String {
        format!("{}/completions", self.base_url)
    }

    pub fn request_body(&self, request: &CompletionRequest) -> serde_json::Value {
        json!({
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_tokens,
            "n": request.params.n,
        })
    }

    fn parse(&self, request: &CompletionRequest, body: &str) -> Result<Vec<String>, BackendError> {
        let wire: WireResponse =
            serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        let mut choices: Vec<(u32, String)> = wire
            .choices
            .into_iter()
            .enumerate()
            .map(|(pos, c)| (c.index.unwrap_or(pos as u32), c.text))
            .collect();
        choices.sort_by_key(|(i, _)| *i);
        if choices.len() != request.params.n as usize {
            return Err(BackendError::MalformedResponse(format!(
                "asked for {} choices, got {}",
                request.params.n,
                choices.len()
            )));
        }
        Ok(choices.into_iter().map(|(_, t)| t).collect())
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        request.validate()?;
        let url = self.endpoint();
        let body = self.request_body(request);
        let start = Instant::now();
        let mut backoff = self.retry.initial_backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            match self.transport.post_json(&url, self.api_key.as_deref(), &body) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let completions = self.parse(request, &reply.body)?;
                    let response = CompletionResponse {
                        completions,
                        backend_id: self.id.clone(),
                        latency_ms: start.elapsed().as_millis() as u64,
                    };
                    check_count(request, &response)?;
                    return Ok(response);
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(BackendError::Auth(format!("HTTP {}", reply.status)));
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last_error = format!("HTTP {}", reply.status);
                }
                Ok(reply) => {
                    return Err(BackendError::InvalidRequest(format!("HTTP {}: {}", reply.status, reply.body)));
                }
                Err(e) => last_error = e,
            }
            if attempt < self.retry.attempts {
                log::warn!("completion attempt {attempt} failed ({last_error}), retrying in {backoff:?}");
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(BackendError::Transport(last_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SamplingParams;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<Result<HttpReply, String>>>,
        seen: Mutex<Vec<serde_json::Value>>,
    }

    impl Canned {
        fn new(mut replies: Vec<Result<HttpReply, String>>) -> Self {
            replies.reverse();
            Canned {
                replies: Mutex::new(replies),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Transport for &'static Canned {
        fn post_json(&self, _url: &str, _bearer: Option<&str>, body: &serde_json::Value) -> Result<HttpReply, String> {
            self.seen.lock().unwrap().push(body.clone());
            self.replies.lock().unwrap().pop().expect("unexpected extra call")
        }
    }

    fn ok(body: &str) -> Result<HttpReply, String> {
        Ok(HttpReply { status: 200, body: body.into() })
    }

    fn backend(replies: Vec<Result<HttpReply, String>>) -> (HttpBackend, &'static Canned) {
        let canned: &'static Canned = Box::leak(Box::new(Canned::new(replies)));
        let b = HttpBackend::new("http://localhost:9/v1/", Some("k".into()), "m", Box::new(canned)).with_retry(
            RetryPolicy {
                attempts: 3,
                initial_backoff: Duration::from_millis(1),
            },
        );
        (b, canned)
    }

    fn req(n: u32) -> CompletionRequest {
        CompletionRequest::new("hello", SamplingParams::default().with_n(n))
    }

    #[test]
    fn choices_sorted_by_index() {
        let (b, seen) = backend(vec![ok(r#"{"choices":[{"index":1,"text":"b"},{"index":0,"text":"a"}]}"#)]);
        let r = b.complete(&req(2)).unwrap();
        assert_eq!(r.completions, ["a", "b"]);
        let body = &seen.seen.lock().unwrap()[0];
        assert_eq!(body["n"], 2);
        assert_eq!(body["model"], "m");
        assert_eq!(b.endpoint(), "http://localhost:9/v1/completions");
    }

    #[test]
    fn short_response_is_malformed() {
        let (b, _) = backend(vec![ok(r#"{"choices":[{"text":"a"}]}"#)]);
        assert!(matches!(b.complete(&req(2)), Err(BackendError::MalformedResponse(_))));
        let (b, _) = backend(vec![ok("not json")]);
        assert!(matches!(b.complete(&req(1)), Err(BackendError::MalformedResponse(_))));
    }

    #[test]
    fn retries_then_succeeds() {
        let (b, seen) = backend(vec![
            Err("connection refused".into()),
            Ok(HttpReply { status: 503, body: String::new() }),
            ok(r#"{"choices":[{"text":"x"}]}"#),
        ]);
        assert_eq!(b.complete(&req(1)).unwrap().completions, ["x"]);
        assert_eq!(seen.seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (b, seen) = backend(vec![Err("a".into()), Err("b".into()), Err("c".into())]);
        let err = b.complete(&req(1)).unwrap_err();
        assert_eq!(err.kind(), "transport_error");
        assert_eq!(seen.seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let (b, seen) = backend(vec![Ok(HttpReply { status: 401, body: String::new() })]);
        assert_eq!(b.complete(&req(1)).unwrap_err().kind(), "auth_error");
        assert_eq!(seen.seen.lock().unwrap().len(), 1);
    }
}
