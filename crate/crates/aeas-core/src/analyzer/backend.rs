//! Extraction backend abstraction: one raw structured response per
//! sub-feature task.
//!
//! Two implementations ship: [`crate::analyzer::rules::RulesBackend`], a
//! deterministic pattern-table analyzer, and [`LiveBackend`], which sends
//! the assembled prompt to a chat-completion model through the cached
//! connector.

use crate::analyzer::SubFeature;
use crate::connectors::llm::{CompletionRequest, LlmClient};
use crate::corpus::{ExploitArtifact, WebDocument};
use crate::error::Result;

/// Everything a backend may consult for one task. Prompt-driven backends
/// read `prompt`; rule-driven backends read the artifact directly.
pub struct TaskContext<'a> {
    pub artifact: &'a ExploitArtifact,
    pub snippets: &'a [String],
    pub prompt: &'a str,
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Produce a raw response in the structured-output wire schema for one
    /// sub-feature task.
    fn analyze(&self, task: SubFeature, ctx: &TaskContext<'_>) -> Result<String>;

    /// Document triage: keep documents carrying exploitation-relevant
    /// signal. The default heuristic keeps code snippets and setup
    /// instructions and drops empty or boilerplate-summary text; backends
    /// may override with something smarter.
    fn keep_document(&self, doc: &WebDocument) -> bool {
        document_has_signal(&doc.text)
    }
}

/// Shared triage heuristic: a document earns its place by containing either
/// code (fenced block, prompt-prefixed commands, indented code) or concrete
/// setup instructions. Bare vulnerability summaries have neither.
pub(crate) fn document_has_signal(text: &str) -> bool {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return false;
    }
    if trimmed.contains("```") {
        return true;
    }
    let setup_markers = [
        "pip install", "pip3 install", "git clone", "docker run", "docker compose",
        "apt install", "apt-get install", "npm install", "cargo install", "usage:",
        "python ", "python3 ", "./", "step 1", "how to run", "requirements.txt",
    ];
    let lower = trimmed.to_lowercase();
    if setup_markers.iter().any(|m| lower.contains(m)) {
        return true;
    }
    // Shell-style command lines ("$ cmd", "# cmd") or indented code blocks.
    trimmed.lines().any(|line| {
        let l = line.trim_start();
        l.starts_with("$ ") || l.starts_with("# ./") || line.starts_with("    ") && !l.is_empty()
    })
}

/// Prompt-driven backend over the cached completion client.
pub struct LiveBackend {
    client: LlmClient,
    model_name: String,
    temperature: f64,
    max_output_tokens: u32,
}

impl LiveBackend {
    pub fn new(client: LlmClient, model_name: impl Into<String>) -> Self {
        LiveBackend {
            client,
            model_name: model_name.into(),
            temperature: 0.0,
            max_output_tokens: 2048,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl Backend for LiveBackend {
    fn name(&self) -> &'static str {
        "live"
    }

    fn analyze(&self, _task: SubFeature, ctx: &TaskContext<'_>) -> Result<String> {
        let req = CompletionRequest {
            model_name: self.model_name.clone(),
            prompt_text: ctx.prompt.to_string(),
            max_output_tokens: self.max_output_tokens,
            temperature: self.temperature,
        };
        self.client.complete(&req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_no_signal() {
        assert!(!document_has_signal(""));
        assert!(!document_has_signal("   \n  "));
    }

    #[test]
    fn fenced_code_block_is_signal() {
        assert!(document_has_signal(
            "Exploitation notes\n```python\nimport requests\n```\n"
        ));
    }

    #[test]
    fn setup_instructions_are_signal() {
        assert!(document_has_signal(
            "First run pip install requests, then python3 exploit.py against the target."
        ));
    }

    #[test]
    fn bare_cve_summary_is_not_signal() {
        let summary = "CVE-2024-31001: AcmeDash before 2.4.1 allows remote attackers \
                       to execute arbitrary code via a crafted dashboard import. \
                       A patch is available in version 2.4.1.";
        assert!(!document_has_signal(summary));
    }
}
