//! Network clients (code-hosting metadata, chat completions) with a
//! deterministic disk cache and a fully offline mode.

pub mod cache;
pub mod host;
pub mod llm;
pub mod transport;

pub use cache::{completion_key, CacheEntry, CompletionCache};
pub use host::{repo_dir_name, HostClient};
pub use llm::{CompletionRequest, LlmClient, ENV_API_BASE_URL, ENV_API_KEY, ENV_OFFLINE};
pub use transport::{
    send_with_retry, HttpRequest, HttpResponse, HttpTransport, Method, RecordingTransport,
    RetryPolicy, Transport,
};
