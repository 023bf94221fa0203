use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A record violated a type invariant. Names the offending file and field.
    #[error("{path}: invalid `{field}`: {reason}")]
    Validation {
        path: PathBuf,
        field: String,
        reason: String,
    },

    #[error("duplicate cve_id `{0}` in corpus")]
    DuplicateCve(String),

    #[error("duplicate artifact_id `{artifact}` under {cve}")]
    DuplicateArtifact { cve: String, artifact: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("rate limited{}", retry_after_secs.map(|s| format!(", retry after {s}s")).unwrap_or_default())]
    RateLimited { retry_after_secs: Option<u64> },

    #[error("transport failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },

    #[error("transport payload was not the expected json shape: {0}")]
    Payload(String),

    #[error("offline and uncached: {0}")]
    OfflineUncached(String),

    #[error("empty prompt_text in completion request")]
    EmptyPrompt,

    #[error(transparent)]
    Finding(#[from] FindingError),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Other(String),
}

/// Structured-output parse failures. Each variant is retry-eligible: the
/// analyzer re-prompts the backend with the error text appended before
/// falling back to conservative defaults.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FindingError {
    #[error("invalid json: {0}")]
    Parse(String),

    #[error("response does not match schema: {0}")]
    Schema(String),

    #[error("confidence {0} outside 1..=5")]
    Range(i64),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(
        path: impl Into<PathBuf>,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Validation {
            path: path.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }
}
