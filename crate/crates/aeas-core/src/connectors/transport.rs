//! HTTP transport abstraction with bounded, jittered retries.
//!
//! Network I/O goes through the [`Transport`] trait so the rest of the
//! pipeline can be exercised hermetically: tests and offline replays swap in
//! [`RecordingTransport`], which serves canned payloads and counts calls.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    /// Header name/value pairs; sensitive values are never logged.
    pub headers: Vec<(String, String)>,
    pub body: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Value,
    /// Seconds from a Retry-After header, when the server sent one.
    pub retry_after_secs: Option<u64>,
}

/// A single-attempt HTTP executor. Retries, status-code policy, and caching
/// live above this trait.
pub trait Transport: Send + Sync {
    fn execute(&self, req: &HttpRequest) -> Result<HttpResponse>;
}

/// Retry schedule for [`send_with_retry`]: exponential backoff with uniform
/// jitter. The defaults make three attempts spread over roughly a second.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
    pub jitter_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay_ms: 200, jitter_ms: 100 }
    }
}

impl RetryPolicy {
    /// Zero-delay variant for tests.
    pub fn immediate(attempts: u32) -> Self {
        RetryPolicy { attempts, base_delay_ms: 0, jitter_ms: 0 }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let backoff = self.base_delay_ms.saturating_mul(1u64 << attempt.min(16));
        let jitter = if self.jitter_ms == 0 {
            0
        } else {
            rand::thread_rng().gen_range(0..self.jitter_ms)
        };
        Duration::from_millis(backoff + jitter)
    }
}

/// Execute a request, retrying transient failures (transport errors, 429,
/// 5xx). Terminal statuses map to typed errors: 404 → not-found,
/// other 4xx → payload error. A 429 that survives all attempts surfaces as a
/// rate-limit error carrying any Retry-After hint.
pub fn send_with_retry(
    transport: &dyn Transport,
    req: &HttpRequest,
    policy: RetryPolicy,
) -> Result<HttpResponse> {
    let mut last_err: Option<Error> = None;
    for attempt in 0..policy.attempts.max(1) {
        if attempt > 0 {
            std::thread::sleep(policy.delay(attempt - 1));
        }
        match transport.execute(req) {
            Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp),
            Ok(resp) if resp.status == 404 => {
                return Err(Error::NotFound(req.url.clone()));
            }
            Ok(resp) if resp.status == 429 => {
                last_err = Some(Error::RateLimited { retry_after_secs: resp.retry_after_secs });
                if let Some(secs) = resp.retry_after_secs {
                    // Respect the server hint, but never beyond the backoff cap.
                    std::thread::sleep(Duration::from_millis(
                        (secs * 1000).min(policy.base_delay_ms.saturating_mul(8)),
                    ));
                }
            }
            Ok(resp) if resp.status >= 500 => {
                last_err = Some(Error::Transport {
                    attempts: attempt + 1,
                    last: format!("{} returned status {}", req.url, resp.status),
                });
            }
            Ok(resp) => {
                return Err(Error::Payload(format!(
                    "{} returned unexpected status {}",
                    req.url, resp.status
                )));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(match last_err {
        Some(Error::RateLimited { retry_after_secs }) => Error::RateLimited { retry_after_secs },
        Some(Error::Transport { last, .. }) => {
            Error::Transport { attempts: policy.attempts, last }
        }
        Some(other) => Error::Transport { attempts: policy.attempts, last: other.to_string() },
        None => Error::Transport { attempts: policy.attempts, last: "no attempts made".into() },
    })
}

/// Live transport over HTTP using a blocking client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Other(format!("http client init: {e}")))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn execute(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let mut builder = match req.method {
            Method::Get => self.client.get(&req.url),
            Method::Post => self.client.post(&req.url),
        };
        for (name, value) in &req.headers {
            builder = builder.header(name, value);
        }
        if let Some(body) = &req.body {
            builder = builder.json(body);
        }
        let resp = builder.send().map_err(|e| Error::Transport {
            attempts: 1,
            last: format!("request to {} failed: {e}", req.url),
        })?;
        let status = resp.status().as_u16();
        let retry_after_secs = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok());
        let text = resp.text().map_err(|e| Error::Transport {
            attempts: 1,
            last: format!("reading body from {}: {e}", req.url),
        })?;
        let body: Value = if text.trim().is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Payload(format!("non-JSON response from {}: {e}", req.url)))?
        };
        Ok(HttpResponse { status, body, retry_after_secs })
    }
}

/// Scripted transport for tests and hermetic replays: serves a queue of
/// canned responses (the last one repeating) and counts every call.
#[derive(Default)]
pub struct RecordingTransport {
    responses: Mutex<Vec<HttpResponse>>,
    calls: AtomicUsize,
    requests: Mutex<Vec<HttpRequest>>,
}

impl RecordingTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Transport that answers every request with `200` and the given body.
    pub fn with_json(body: Value) -> Self {
        let t = Self::new();
        t.push_response(HttpResponse { status: 200, body, retry_after_secs: None });
        t
    }

    pub fn push_response(&self, resp: HttpResponse) {
        self.responses.lock().unwrap().push(resp);
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Requests seen so far, in order.
    pub fn requests(&self) -> Vec<HttpRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for RecordingTransport {
    fn execute(&self, req: &HttpRequest) -> Result<HttpResponse> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(req.clone());
        let responses = self.responses.lock().unwrap();
        match responses.get(n).or_else(|| responses.last()) {
            Some(resp) => Ok(resp.clone()),
            None => Err(Error::Transport {
                attempts: 1,
                last: "recording transport has no scripted response".into(),
            }),
        }
    }
}
