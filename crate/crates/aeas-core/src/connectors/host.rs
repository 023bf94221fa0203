//! Code-hosting connector: repository metadata plus file tree, resolved from
//! a local fixture directory in offline mode or a metadata API online.
//!
//! Fixture layout mirrors a corpus artifact directory (`repo.json` plus raw
//! files), with `/` in the repository id mapped to `__` for the directory
//! name.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use crate::corpus::{self, ArtifactFile, ExploitArtifact, FileKind, RepoMeta};
use crate::connectors::transport::{
    send_with_retry, HttpRequest, Method, RetryPolicy, Transport,
};
use crate::error::{Error, Result};

/// Directory-safe encoding of a `owner/name` repository id.
pub fn repo_dir_name(repo_id: &str) -> String {
    repo_id.replace('/', "__")
}

pub struct HostClient {
    transport: Arc<dyn Transport>,
    fixture_root: Option<PathBuf>,
    offline: bool,
    base_url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

#[derive(Deserialize)]
struct RemoteFile {
    path: String,
    #[serde(default)]
    content: Option<String>,
}

impl HostClient {
    pub fn new(transport: Arc<dyn Transport>, offline: bool) -> Self {
        HostClient {
            transport,
            fixture_root: None,
            offline,
            base_url: "https://api.github.com".to_string(),
            api_key: std::env::var(crate::connectors::llm::ENV_API_KEY)
                .ok()
                .filter(|v| !v.trim().is_empty()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_fixture_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.fixture_root = Some(root.into());
        self
    }

    pub fn with_base_url(mut self, base_url: impl Into<String>) -> Self {
        self.base_url = base_url.into();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Fetch repository metadata and file tree. A configured fixture root is
    /// always consulted first; offline mode turns a fixture miss into a
    /// not-found error instead of a network call.
    pub fn fetch_repo(&self, repo_id: &str) -> Result<ExploitArtifact> {
        if let Some(root) = &self.fixture_root {
            let dir = root.join(repo_dir_name(repo_id));
            if dir.is_dir() {
                return corpus::load_artifact(&dir, &repo_dir_name(repo_id));
            }
        }
        if self.offline {
            return Err(Error::NotFound(format!("repository {repo_id} (offline)")));
        }
        self.fetch_remote(repo_id)
    }

    fn fetch_remote(&self, repo_id: &str) -> Result<ExploitArtifact> {
        let headers = self.headers();
        let meta_req = HttpRequest {
            method: Method::Get,
            url: format!("{}/repos/{repo_id}", self.base_url.trim_end_matches('/')),
            headers: headers.clone(),
            body: None,
        };
        let meta_resp = send_with_retry(self.transport.as_ref(), &meta_req, self.retry)?;
        let meta: RepoMeta = serde_json::from_value(meta_resp.body)
            .map_err(|e| Error::Payload(format!("repository metadata for {repo_id}: {e}")))?;

        let files_req = HttpRequest {
            method: Method::Get,
            url: format!("{}/repos/{repo_id}/files", self.base_url.trim_end_matches('/')),
            headers,
            body: None,
        };
        let files_resp = send_with_retry(self.transport.as_ref(), &files_req, self.retry)?;
        let remote_files: Vec<RemoteFile> = serde_json::from_value(files_resp.body)
            .map_err(|e| Error::Payload(format!("file listing for {repo_id}: {e}")))?;

        let mut files: Vec<ArtifactFile> = remote_files
            .into_iter()
            .map(|f| {
                let kind = FileKind::infer(&f.path);
                let content = if kind.is_textual() { f.content } else { None };
                ArtifactFile { path: f.path, kind, content }
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));

        Ok(ExploitArtifact {
            artifact_id: repo_dir_name(repo_id),
            repo: meta,
            files,
            docs: Vec::new(),
        })
    }

    fn headers(&self) -> Vec<(String, String)> {
        let mut headers = vec![("accept".to_string(), "application/json".to_string())];
        if let Some(token) = &self.api_key {
            headers.push(("authorization".to_string(), format!("Bearer {token}")));
        }
        headers
    }
}
