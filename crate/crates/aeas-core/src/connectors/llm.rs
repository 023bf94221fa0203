//! Chat-completion client with deterministic caching and an offline mode.
//!
//! Every completion is keyed by `(model_name, prompt_text, temperature)`.
//! Cache hits return without touching the network; offline mode turns a
//! miss into an error instead of a call. Wire format is a chat-completion
//! style JSON POST (`model`, `messages`, `max_tokens`, `temperature`),
//! answered with `choices[0].message.content`.

use std::sync::{Arc, Condvar, Mutex};

use chrono::Utc;
use serde_json::{json, Value};

use crate::connectors::cache::{completion_key, CacheEntry, CompletionCache};
use crate::connectors::transport::{
    send_with_retry, HttpRequest, Method, RetryPolicy, Transport,
};
use crate::error::{Error, Result};

/// Environment variable carrying the API bearer token.
pub const ENV_API_KEY: &str = "AEAS_API_KEY";
/// Environment variable overriding the completion endpoint base URL.
pub const ENV_API_BASE_URL: &str = "AEAS_API_BASE_URL";
/// Set to `1` to forbid all network calls (cache/fixtures only).
pub const ENV_OFFLINE: &str = "AEAS_OFFLINE";

const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model_name: String,
    pub prompt_text: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn new(model_name: impl Into<String>, prompt_text: impl Into<String>) -> Self {
        CompletionRequest {
            model_name: model_name.into(),
            prompt_text: prompt_text.into(),
            max_output_tokens: 2048,
            temperature: 0.0,
        }
    }

    pub fn cache_key(&self) -> String {
        completion_key(&self.model_name, &self.prompt_text, self.temperature)
    }
}

/// Counting semaphore bounding concurrent in-flight network calls.
struct InFlightGate {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl InFlightGate {
    fn new(cap: usize) -> Self {
        InFlightGate { permits: Mutex::new(cap.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.freed.wait(permits).unwrap();
        }
        *permits -= 1;
        InFlightPermit { gate: self }
    }
}

struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.gate.permits.lock().unwrap() += 1;
        self.gate.freed.notify_one();
    }
}

pub struct LlmClient {
    transport: Arc<dyn Transport>,
    cache: CompletionCache,
    offline: bool,
    base_url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    gate: InFlightGate,
    calls: std::sync::atomic::AtomicUsize,
}

impl LlmClient {
    pub fn new(transport: Arc<dyn Transport>, cache: CompletionCache, offline: bool) -> Self {
        let base_url = std::env::var(ENV_API_BASE_URL)
            .ok()
            .filter(|v| !v.trim().is_empty())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
        let api_key = std::env::var(ENV_API_KEY).ok().filter(|v| !v.trim().is_empty());
        LlmClient {
            transport,
            cache,
            offline,
            base_url,
            api_key,
            retry: RetryPolicy::default(),
            gate: InFlightGate::new(4),
            calls: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn with_base_url(mut self, base_url: impl Into<String>) -> Self {
        self.base_url = base_url.into();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_in_flight_cap(mut self, cap: usize) -> Self {
        self.gate = InFlightGate::new(cap);
        self
    }

    /// Honors `AEAS_OFFLINE=1` in addition to an explicit `offline` flag.
    pub fn offline_from_env() -> bool {
        std::env::var(ENV_OFFLINE).map(|v| v == "1").unwrap_or(false)
    }

    /// Network calls performed by this client (cache hits excluded).
    pub fn network_calls(&self) -> usize {
        self.calls.load(std::sync::atomic::Ordering::SeqCst)
    }

    pub fn cache(&self) -> &CompletionCache {
        &self.cache
    }

    /// Resolve a completion: cache first, then (online only) one network
    /// round-trip whose result is persisted before being returned.
    pub fn complete(&self, req: &CompletionRequest) -> Result<String> {
        if req.prompt_text.trim().is_empty() {
            return Err(Error::EmptyPrompt);
        }
        let key = req.cache_key();
        if let Some(entry) = self.cache.get(&key)? {
            return Ok(entry.response_text);
        }
        if self.offline {
            return Err(Error::OfflineUncached(format!(
                "model {} with key {}",
                req.model_name, key
            )));
        }

        let _permit = self.gate.acquire();
        self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
        if let Some(token) = &self.api_key {
            headers.push(("authorization".to_string(), format!("Bearer {token}")));
        }
        let http_req = HttpRequest {
            method: Method::Post,
            url: format!("{}/chat/completions", self.base_url.trim_end_matches('/')),
            headers,
            body: Some(json!({
                "model": req.model_name,
                "messages": [{"role": "user", "content": req.prompt_text}],
                "max_tokens": req.max_output_tokens,
                "temperature": req.temperature,
            })),
        };
        let resp = send_with_retry(self.transport.as_ref(), &http_req, self.retry)?;
        let text = extract_completion_text(&resp.body)?;
        self.cache.put(&CacheEntry {
            key,
            response_text: text.clone(),
            stored_at: Utc::now(),
        })?;
        Ok(text)
    }
}

fn extract_completion_text(body: &Value) -> Result<String> {
    body.get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(|t| t.as_str())
        .map(str::to_string)
        .ok_or_else(|| {
            Error::Payload("completion response missing choices[0].message.content".into())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectors::transport::RecordingTransport;
    use tempfile::TempDir;

    fn chat_body(text: &str) -> Value {
        json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
    }

    fn client(transport: Arc<RecordingTransport>, dir: &TempDir, offline: bool) -> LlmClient {
        LlmClient::new(transport, CompletionCache::new(dir.path()), offline)
            .with_base_url("http://unit.test")
            .with_retry(RetryPolicy::immediate(3))
    }

    #[test]
    fn repeated_request_served_from_cache() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::with_json(chat_body("answer")));
        let c = client(transport.clone(), &dir, false);
        let req = CompletionRequest::new("m", "analyze this");
        assert_eq!(c.complete(&req).unwrap(), "answer");
        assert_eq!(c.complete(&req).unwrap(), "answer");
        assert_eq!(transport.call_count(), 1, "second call must be a cache hit");
    }

    #[test]
    fn temperature_changes_cache_key() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::with_json(chat_body("x")));
        let c = client(transport.clone(), &dir, false);
        let mut req = CompletionRequest::new("m", "p");
        c.complete(&req).unwrap();
        req.temperature = 0.7;
        c.complete(&req).unwrap();
        assert_eq!(transport.call_count(), 2);
    }

    #[test]
    fn offline_miss_is_an_error() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::new());
        let c = client(transport.clone(), &dir, true);
        let err = c.complete(&CompletionRequest::new("m", "p")).unwrap_err();
        assert!(err.to_string().contains("offline and uncached"), "got: {err}");
        assert_eq!(transport.call_count(), 0);
    }

    #[test]
    fn offline_hit_is_served() {
        let dir = TempDir::new().unwrap();
        let online_transport = Arc::new(RecordingTransport::with_json(chat_body("warm")));
        let online = client(online_transport, &dir, false);
        let req = CompletionRequest::new("m", "p");
        online.complete(&req).unwrap();

        let offline_transport = Arc::new(RecordingTransport::new());
        let offline = client(offline_transport.clone(), &dir, true);
        assert_eq!(offline.complete(&req).unwrap(), "warm");
        assert_eq!(offline_transport.call_count(), 0);
    }

    #[test]
    fn empty_prompt_rejected() {
        let dir = TempDir::new().unwrap();
        let c = client(Arc::new(RecordingTransport::new()), &dir, false);
        let err = c.complete(&CompletionRequest::new("m", "   ")).unwrap_err();
        assert!(matches!(err, Error::EmptyPrompt));
    }

    #[test]
    fn malformed_payload_is_typed_error() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::with_json(json!({"unexpected": true})));
        let c = client(transport, &dir, false);
        let err = c.complete(&CompletionRequest::new("m", "p")).unwrap_err();
        assert!(matches!(err, Error::Payload(_)));
    }

    #[test]
    fn request_body_is_chat_completion_shaped() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::with_json(chat_body("ok")));
        let c = client(transport.clone(), &dir, false);
        let mut req = CompletionRequest::new("model-x", "the prompt");
        req.max_output_tokens = 512;
        c.complete(&req).unwrap();
        let sent = &transport.requests()[0];
        assert!(sent.url.ends_with("/chat/completions"));
        let body = sent.body.as_ref().unwrap();
        assert_eq!(body["model"], "model-x");
        assert_eq!(body["messages"][0]["content"], "the prompt");
        assert_eq!(body["max_tokens"], 512);
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn concurrent_completes_are_bounded_and_cached() {
        let dir = TempDir::new().unwrap();
        let transport = Arc::new(RecordingTransport::with_json(chat_body("shared")));
        let c = Arc::new(
            client(transport.clone(), &dir, false).with_in_flight_cap(2),
        );
        std::thread::scope(|scope| {
            for i in 0..8 {
                let c = Arc::clone(&c);
                scope.spawn(move || {
                    let req = CompletionRequest::new("m", format!("prompt {}", i % 4));
                    assert_eq!(c.complete(&req).unwrap(), "shared");
                });
            }
        });
        // At most one network call per distinct prompt; possibly fewer than
        // 8 thanks to the cache, never more than 8.
        assert!(transport.call_count() <= 8);
        assert!(transport.call_count() >= 4);
    }
}
