//! Rule-based repository elimination and prioritization, plus file and web
//! content filtering.
//!
//! Elimination keeps repositories whose confidence score
//! `w1*d + w2*i + w3*t` clears a threshold, after a hard size gate.
//! Prioritization ranks the kept set by the quality score
//! `stars * lambda * age_days / max(forks, 1)`.

mod content;

pub use content::extract_main_content;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{FileKind, RepoMeta};

/// Goodness indicators in [0,1] derived from repository metadata. Higher is
/// better: a long description, a pile of issues, or off-topic labels pull
/// the corresponding indicator toward 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepoSignals {
    pub d: f64,
    pub i: f64,
    pub t: f64,
}

/// Tunables for the elimination / prioritization stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Confidence weights (description, issues, topics). Expected to sum to 1
    /// for configs loaded from disk; the decision rule itself is invariant
    /// under joint scaling of weights and threshold.
    pub confidence_weights: [f64; 3],
    pub confidence_threshold: f64,
    /// Quality-score normalization per day of repository age.
    pub quality_lambda: f64,
    /// Description length at which the `d` indicator reaches 0.
    pub description_len_max: u64,
    /// Issue count at which the `i` indicator reaches 0.
    pub issue_count_max: u64,
    /// Size gate: repositories outside [min, max] bytes are dropped outright.
    pub size_min_bytes: u64,
    pub size_max_bytes: u64,
    /// Extension overrides for the file filter (no leading dot).
    pub keep_extensions: BTreeSet<String>,
    pub drop_extensions: BTreeSet<String>,
    /// Topics counted as relevant by `repo_signals`, merged with per-CVE
    /// context (cve id, application name) by the pipeline.
    pub relevant_topics: BTreeSet<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            confidence_weights: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            confidence_threshold: 0.5,
            quality_lambda: 1.0 / 365.0,
            description_len_max: 2000,
            issue_count_max: 100,
            size_min_bytes: 1024,
            size_max_bytes: 50 * 1024 * 1024,
            keep_extensions: BTreeSet::new(),
            drop_extensions: BTreeSet::new(),
            relevant_topics: ["exploit", "poc", "cve", "security", "vulnerability", "rce"]
                .into_iter()
                .map(str::to_string)
                .collect(),
        }
    }
}

impl FilterConfig {
    /// Validate a config loaded from disk. Weights must be nonnegative and
    /// sum to 1; lambda must be positive.
    pub fn validate(&self) -> Result<(), String> {
        if self.confidence_weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err("confidence_weights must be nonnegative".into());
        }
        let sum: f64 = self.confidence_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("confidence_weights sum to {sum}, expected 1"));
        }
        if !(self.quality_lambda > 0.0) {
            return Err("quality_lambda must be > 0".into());
        }
        Ok(())
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Derive the three confidence indicators from repository metadata.
///
/// `d` and `i` fall linearly from 1 to 0 as description length / issue count
/// approach their configured maxima; `t` is the fraction of topic labels in
/// the relevant set, or 1 for an unlabeled repository.
pub fn repo_signals(meta: &RepoMeta, relevant_topics: &BTreeSet<String>, cfg: &FilterConfig) -> RepoSignals {
    let d = clamp01(1.0 - meta.description_len as f64 / cfg.description_len_max as f64);
    let i = clamp01(1.0 - meta.issue_count as f64 / cfg.issue_count_max as f64);
    let t = if meta.topic_labels.is_empty() {
        1.0
    } else {
        let relevant = meta
            .topic_labels
            .iter()
            .filter(|label| relevant_topics.contains(label.to_lowercase().as_str()))
            .count();
        relevant as f64 / meta.topic_labels.len() as f64
    };
    RepoSignals { d, i, t }
}

/// Weighted confidence score `w1*d + w2*i + w3*t`.
pub fn confidence_score(s: RepoSignals, cfg: &FilterConfig) -> f64 {
    let [w1, w2, w3] = cfg.confidence_weights;
    w1 * s.d + w2 * s.i + w3 * s.t
}

/// Quality score `stars * lambda * age_days / max(forks, 1)`, where age is
/// measured from `created_at` to `now` in days.
pub fn quality_score(meta: &RepoMeta, now: DateTime<Utc>, cfg: &FilterConfig) -> f64 {
    let age_days = (now - meta.created_at).num_seconds() as f64 / 86_400.0;
    let forks = meta.forks.max(1) as f64;
    meta.stars as f64 * cfg.quality_lambda * age_days / forks
}

fn size_ok(meta: &RepoMeta, cfg: &FilterConfig) -> bool {
    (cfg.size_min_bytes..=cfg.size_max_bytes).contains(&meta.size_bytes)
}

/// Keep repositories that pass the size gate and whose confidence score is
/// at or above the threshold. Idempotent.
pub fn eliminate<'a>(
    repos: &[(&'a RepoMeta, RepoSignals)],
    cfg: &FilterConfig,
) -> Vec<&'a RepoMeta> {
    repos
        .iter()
        .filter(|(meta, signals)| {
            size_ok(meta, cfg) && confidence_score(*signals, cfg) >= cfg.confidence_threshold
        })
        .map(|(meta, _)| *meta)
        .collect()
}

/// Rank the kept repositories by quality score, descending. Ties break by
/// stars (more first), then `repo_id` lexicographically. Truncates to
/// `top_n` entries.
pub fn prioritize<'a>(
    repos: &[(&'a RepoMeta, RepoSignals)],
    now: DateTime<Utc>,
    cfg: &FilterConfig,
    top_n: usize,
) -> Vec<&'a RepoMeta> {
    let mut kept = eliminate(repos, cfg);
    kept.sort_by(|a, b| {
        quality_score(b, now, cfg)
            .partial_cmp(&quality_score(a, now, cfg))
            .expect("quality scores are finite")
            .then_with(|| b.stars.cmp(&a.stars))
            .then_with(|| a.repo_id.cmp(&b.repo_id))
    });
    kept.truncate(top_n);
    kept
}

/// File-level retention decision. Source code and README/doc files are kept;
/// binary, media, and configuration files are dropped. The config's
/// extension sets override the kind rule, with `drop` taking precedence.
pub fn file_filter(path: &str, kind: FileKind, cfg: &FilterConfig) -> bool {
    let ext = path
        .rsplit('/')
        .next()
        .unwrap_or(path)
        .rsplit_once('.')
        .map(|(_, e)| e.to_ascii_lowercase())
        .unwrap_or_default();
    if cfg.drop_extensions.contains(&ext) {
        return false;
    }
    if cfg.keep_extensions.contains(&ext) {
        return true;
    }
    matches!(kind, FileKind::Source | FileKind::Readme | FileKind::Doc)
}
