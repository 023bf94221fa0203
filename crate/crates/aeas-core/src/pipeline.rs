//! End-to-end pipeline stages and their persisted artifacts.
//!
//! Each stage reads the previous stage's output from the run directory and
//! writes a fixed filename: `filter` → `manifest.json`, `extract` →
//! `findings/<cve>/<artifact>.json`, `score` → `scores.json` + `report.md`,
//! `eval` → `metrics.json`. Outputs are pure functions of (corpus, config,
//! cache contents), so every stage is re-runnable and deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analyzer::{
    extract_features, filter_document, AnalyzerConfig, Backend, FeatureVector, LiveBackend,
    PopularityInputs, RulesBackend,
};
use crate::connectors::{CompletionCache, HttpTransport, LlmClient, Transport};
use crate::corpus::{
    corpus_reference_time, load_corpus, load_labels, write_pretty_json, ExploitArtifact,
    VulnerabilityRecord,
};
use crate::error::{Error, Result};
use crate::evalkit::{
    self, functional_fraction, precision_at_k, recall_k_for_top_j, score_agreement,
    top_k_success, AgreementStats, RankingCase,
};
use crate::prefilter::{
    confidence_score, file_filter, quality_score, repo_signals, FilterConfig,
};
use crate::scoring::{score_exploit, vulnerability_severity, ExploitScore, Weights};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FINDINGS_DIR: &str = "findings";
pub const SCORES_FILE: &str = "scores.json";
pub const REPORT_FILE: &str = "report.md";
pub const METRICS_FILE: &str = "metrics.json";

/// Which analysis backend extracts sub-features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// Deterministic pattern-table analyzer; fully offline.
    Rules,
    /// LLM-backed analyzer via the completion connector (cache-aware).
    Live,
}

impl std::str::FromStr for BackendChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rules" => Ok(BackendChoice::Rules),
            "live" => Ok(BackendChoice::Live),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend `{other}` (expected `rules` or `live`)"
            ))),
        }
    }
}

/// Connector settings: model identity, sampling, cache location, and
/// offline behavior for the live backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectorsConfig {
    pub model_name: String,
    pub temperature: f64,
    /// Defaults to `<out>/cache` when unset.
    pub cache_dir: Option<PathBuf>,
    /// Serve completions from cache only; uncached prompts fail.
    pub offline: bool,
    pub base_url: Option<String>,
    /// Parse-retry budget per sub-feature (total attempts = retries + 1).
    pub retry_limit: u32,
    /// Retrieved context snippets per prompt.
    pub retrieval_k: usize,
}

impl Default for ConnectorsConfig {
    fn default() -> Self {
        let analyzer = AnalyzerConfig::default();
        ConnectorsConfig {
            model_name: "gpt-4o".to_string(),
            temperature: 0.0,
            cache_dir: None,
            offline: false,
            base_url: None,
            retry_limit: analyzer.retry_limit,
            retrieval_k: analyzer.retrieval_k,
        }
    }
}

/// On-disk run configuration: one JSON document with optional sections;
/// anything omitted takes the built-in default, and command-line flags
/// override file values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub corpus_root: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub backend: Option<BackendChoice>,
    pub concurrency_cap: Option<usize>,
    /// Reference instant for age-dependent scores; defaults to the corpus
    /// reference time so repeated runs are reproducible.
    pub evaluated_at: Option<DateTime<Utc>>,
    pub filter: Option<FilterConfig>,
    pub weights: Option<Weights>,
    pub connectors: Option<ConnectorsConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::json(path, e))
    }
}

/// Command-line overrides applied on top of a [`ConfigFile`].
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub backend: Option<BackendChoice>,
    pub offline: bool,
    pub cache_dir: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub backend: BackendChoice,
    pub filter: FilterConfig,
    pub weights: Weights,
    pub connectors: ConnectorsConfig,
    pub concurrency_cap: usize,
    pub evaluated_at: Option<DateTime<Utc>>,
}

impl RunConfig {
    /// Merge a config file (if any) with command-line overrides and
    /// validate the result.
    pub fn resolve(file: ConfigFile, overrides: Overrides) -> Result<RunConfig> {
        let corpus_root = overrides
            .corpus
            .or(file.corpus_root)
            .ok_or_else(|| Error::Config("no corpus root given (use --corpus)".to_string()))?;
        let out_dir = overrides
            .out
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from("aeas-out"));
        let mut connectors = file.connectors.unwrap_or_default();
        if overrides.offline || LlmClient::offline_from_env() {
            connectors.offline = true;
        }
        let cache_dir = overrides
            .cache_dir
            .or_else(|| connectors.cache_dir.clone())
            .unwrap_or_else(|| out_dir.join("cache"));
        connectors.cache_dir = Some(cache_dir.clone());

        let filter = file.filter.unwrap_or_default();
        filter.validate().map_err(Error::Config)?;
        let weights = file.weights.unwrap_or_default();
        weights.validate().map_err(Error::Config)?;
        let concurrency_cap = file.concurrency_cap.unwrap_or(4);
        if concurrency_cap < 1 {
            return Err(Error::Config("concurrency_cap must be at least 1".to_string()));
        }

        Ok(RunConfig {
            corpus_root,
            out_dir,
            cache_dir,
            backend: overrides.backend.or(file.backend).unwrap_or(BackendChoice::Rules),
            filter,
            weights,
            connectors,
            concurrency_cap,
            evaluated_at: file.evaluated_at,
        })
    }

    pub fn analyzer_config(&self) -> AnalyzerConfig {
        AnalyzerConfig {
            retry_limit: self.connectors.retry_limit,
            retrieval_k: self.connectors.retrieval_k,
        }
    }

    fn evaluated_at_for(&self, corpus: &[VulnerabilityRecord]) -> DateTime<Utc> {
        self.evaluated_at
            .unwrap_or_else(|| corpus_reference_time(corpus))
    }
}

/// Build the configured analysis backend. The live backend can be handed an
/// instrumented transport for tests; `None` uses real HTTP.
pub fn make_backend(
    cfg: &RunConfig,
    transport: Option<Arc<dyn Transport>>,
) -> Result<Box<dyn Backend>> {
    match cfg.backend {
        BackendChoice::Rules => Ok(Box::new(RulesBackend::new())),
        BackendChoice::Live => {
            let transport: Arc<dyn Transport> = match transport {
                Some(t) => t,
                None => Arc::new(HttpTransport::new()?),
            };
            let cache = CompletionCache::new(&cfg.cache_dir);
            let mut client = LlmClient::new(transport, cache, cfg.connectors.offline)
                .with_in_flight_cap(cfg.concurrency_cap);
            if let Some(base) = &cfg.connectors.base_url {
                client = client.with_base_url(base.clone());
            }
            Ok(Box::new(
                LiveBackend::new(client, cfg.connectors.model_name.clone())
                    .with_temperature(cfg.connectors.temperature),
            ))
        }
    }
}

/// One repository's pre-filter outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterEntry {
    pub artifact_id: String,
    pub repo_id: String,
    pub confidence: f64,
    pub quality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_reason: Option<String>,
}

/// Per-CVE kept/dropped repository lists. Kept entries are in priority
/// order (quality descending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveFilter {
    pub cve_id: String,
    pub kept: Vec<FilterEntry>,
    pub dropped: Vec<FilterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterManifest {
    pub evaluated_at: DateTime<Utc>,
    pub cves: Vec<CveFilter>,
}

impl FilterManifest {
    pub fn kept_ids(&self) -> BTreeMap<String, Vec<String>> {
        self.cves
            .iter()
            .map(|c| {
                (
                    c.cve_id.clone(),
                    c.kept.iter().map(|e| e.artifact_id.clone()).collect(),
                )
            })
            .collect()
    }
}

fn filter_cve(record: &VulnerabilityRecord, now: DateTime<Utc>, cfg: &FilterConfig) -> CveFilter {
    // Topic relevance counts the configured topics plus per-CVE context.
    let mut topics: BTreeSet<String> = cfg.relevant_topics.clone();
    topics.insert(record.cve_id.to_ascii_lowercase());
    topics.insert(record.application.to_ascii_lowercase());

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for artifact in &record.exploits {
        let meta = &artifact.repo;
        let signals = repo_signals(meta, &topics, cfg);
        let confidence = confidence_score(signals, cfg);
        let quality = quality_score(meta, now, cfg);
        let size_ok = (cfg.size_min_bytes..=cfg.size_max_bytes).contains(&meta.size_bytes);
        let mut entry = FilterEntry {
            artifact_id: artifact.artifact_id.clone(),
            repo_id: meta.repo_id.clone(),
            confidence,
            quality,
            dropped_reason: None,
        };
        if !size_ok {
            entry.dropped_reason = Some(format!(
                "size {} bytes outside [{}, {}]",
                meta.size_bytes, cfg.size_min_bytes, cfg.size_max_bytes
            ));
            dropped.push(entry);
        } else if confidence < cfg.confidence_threshold {
            entry.dropped_reason = Some(format!(
                "confidence {confidence:.4} below threshold {:.4}",
                cfg.confidence_threshold
            ));
            dropped.push(entry);
        } else {
            kept.push(entry);
        }
    }
    // Priority order: quality desc, stars desc, repo_id asc. Stars are not
    // in the entry, so recover them from the record for the tie-break.
    let stars: BTreeMap<&str, u64> = record
        .exploits
        .iter()
        .map(|a| (a.artifact_id.as_str(), a.repo.stars))
        .collect();
    kept.sort_by(|a, b| {
        b.quality
            .partial_cmp(&a.quality)
            .expect("quality scores are finite")
            .then_with(|| stars[b.artifact_id.as_str()].cmp(&stars[a.artifact_id.as_str()]))
            .then_with(|| a.repo_id.cmp(&b.repo_id))
    });
    dropped.sort_by(|a, b| a.artifact_id.cmp(&b.artifact_id));
    CveFilter { cve_id: record.cve_id.clone(), kept, dropped }
}

/// Pre-filter the corpus and write `manifest.json`.
pub fn run_filter(cfg: &RunConfig) -> Result<FilterManifest> {
    let corpus = load_corpus(&cfg.corpus_root)?;
    let now = cfg.evaluated_at_for(&corpus);
    let manifest = FilterManifest {
        evaluated_at: now,
        cves: corpus.iter().map(|r| filter_cve(r, now, &cfg.filter)).collect(),
    };
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    write_pretty_json(&cfg.out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// One artifact's extracted features as persisted under `findings/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsFile {
    pub cve_id: String,
    pub artifact_id: String,
    pub backend: String,
    pub features: FeatureVector,
}

/// Copy of an artifact with pre-filter file rules and document triage
/// applied, so the analyzer only sees retained material.
fn triaged_artifact(
    artifact: &ExploitArtifact,
    cfg: &FilterConfig,
    backend: &dyn Backend,
) -> ExploitArtifact {
    let mut out = artifact.clone();
    out.files.retain(|f| file_filter(&f.path, f.kind, cfg));
    out.docs.retain(|d| filter_document(d, backend));
    out
}

/// Extract sub-features for every kept artifact and write one findings file
/// per artifact. Uses `manifest.json` when present; otherwise filters
/// in-process. Extraction failures inside the analyzer degrade to
/// conservative defaults rather than failing the run.
pub fn run_extract(cfg: &RunConfig, backend: &dyn Backend) -> Result<Vec<FindingsFile>> {
    let corpus = load_corpus(&cfg.corpus_root)?;
    let manifest_path = cfg.out_dir.join(MANIFEST_FILE);
    let kept: BTreeMap<String, Vec<String>> = if manifest_path.exists() {
        let raw = std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: FilterManifest =
            serde_json::from_str(&raw).map_err(|e| Error::json(&manifest_path, e))?;
        manifest.kept_ids()
    } else {
        let now = cfg.evaluated_at_for(&corpus);
        corpus
            .iter()
            .map(|r| filter_cve(r, now, &cfg.filter))
            .map(|c| (c.cve_id.clone(), c.kept.iter().map(|e| e.artifact_id.clone()).collect()))
            .collect()
    };

    let mut jobs: Vec<(String, ExploitArtifact)> = Vec::new();
    for record in &corpus {
        let Some(ids) = kept.get(&record.cve_id) else { continue };
        for artifact in &record.exploits {
            if ids.contains(&artifact.artifact_id) {
                jobs.push((
                    record.cve_id.clone(),
                    triaged_artifact(artifact, &cfg.filter, backend),
                ));
            }
        }
    }

    let analyzer_cfg = cfg.analyzer_config();
    let results: Mutex<BTreeMap<(String, String), FeatureVector>> = Mutex::new(BTreeMap::new());
    let cursor = AtomicUsize::new(0);
    let workers = cfg.concurrency_cap.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                let Some((cve_id, artifact)) = jobs.get(i) else { break };
                let features = extract_features(artifact, backend, &analyzer_cfg);
                results
                    .lock()
                    .expect("no panics while holding results lock")
                    .insert((cve_id.clone(), artifact.artifact_id.clone()), features);
            });
        }
    });

    let findings_root = cfg.out_dir.join(FINDINGS_DIR);
    let mut written = Vec::new();
    for ((cve_id, artifact_id), features) in results.into_inner().expect("workers joined") {
        let file = FindingsFile {
            cve_id: cve_id.clone(),
            artifact_id: artifact_id.clone(),
            backend: backend.name().to_string(),
            features,
        };
        let dir = findings_root.join(&cve_id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_pretty_json(&dir.join(format!("{artifact_id}.json")), &file)?;
        written.push(file);
    }
    Ok(written)
}

/// One scored exploit inside `scores.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitReport {
    pub artifact_id: String,
    pub score: ExploitScore,
}

/// One vulnerability's scores: severity, ranked artifacts, and per-exploit
/// feature breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveScore {
    pub cve_id: String,
    pub severity: f64,
    /// Artifact ids by descending actionability.
    pub ranking: Vec<String>,
    pub exploits: Vec<ExploitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresFile {
    pub evaluated_at: DateTime<Utc>,
    pub backend: String,
    /// CVE ids by descending severity (ties by id).
    pub ranking: Vec<String>,
    /// Per-CVE detail, in `cve_id` order.
    pub cves: Vec<CveScore>,
}

fn load_findings(root: &Path) -> Result<BTreeMap<String, Vec<FindingsFile>>> {
    let mut by_cve: BTreeMap<String, Vec<FindingsFile>> = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry
            .map_err(|e| Error::io(root, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        if !entry.file_type().is_file()
            || entry.path().extension().and_then(|e| e.to_str()) != Some("json")
        {
            continue;
        }
        let raw = std::fs::read_to_string(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        let file: FindingsFile =
            serde_json::from_str(&raw).map_err(|e| Error::json(entry.path(), e))?;
        by_cve.entry(file.cve_id.clone()).or_default().push(file);
    }
    for files in by_cve.values_mut() {
        files.sort_by(|a, b| a.artifact_id.cmp(&b.artifact_id));
    }
    Ok(by_cve)
}

/// Aggregate findings into per-exploit actionability and per-CVE severity;
/// write `scores.json` and `report.md`.
pub fn run_score(cfg: &RunConfig) -> Result<ScoresFile> {
    let corpus = load_corpus(&cfg.corpus_root)?;
    let findings_root = cfg.out_dir.join(FINDINGS_DIR);
    if !findings_root.exists() {
        return Err(Error::Config(format!(
            "no findings at {}; run `aeas extract` first",
            findings_root.display()
        )));
    }
    let mut findings = load_findings(&findings_root)?;

    let backend_name = findings
        .values()
        .flatten()
        .next()
        .map(|f| f.backend.clone())
        .unwrap_or_else(|| "rules".to_string());

    let mut cves = Vec::new();
    for record in &corpus {
        let files = findings.remove(&record.cve_id).unwrap_or_default();
        // Popularity counts every sibling artifact collected for the CVE,
        // not just those that survived filtering.
        let n_exploits = record.exploits.len() as u64;
        let repo_by_id: BTreeMap<&str, &ExploitArtifact> = record
            .exploits
            .iter()
            .map(|a| (a.artifact_id.as_str(), a))
            .collect();

        let mut exploits = Vec::new();
        for file in files {
            let Some(artifact) = repo_by_id.get(file.artifact_id.as_str()) else {
                return Err(Error::Validation {
                    path: findings_root.clone(),
                    field: "artifact_id".to_string(),
                    reason: format!(
                        "findings for unknown artifact `{}` under `{}`",
                        file.artifact_id, record.cve_id
                    ),
                });
            };
            let pop = PopularityInputs {
                n_exploits,
                stars: artifact.repo.stars,
                forks: artifact.repo.forks,
            };
            let score = score_exploit(&file.features, &pop, &cfg.weights);
            exploits.push(ExploitReport { artifact_id: file.artifact_id, score });
        }
        exploits.sort_by(|a, b| {
            b.score
                .actionability
                .partial_cmp(&a.score.actionability)
                .expect("actionability is finite")
                .then_with(|| a.artifact_id.cmp(&b.artifact_id))
        });
        let severity =
            vulnerability_severity(&exploits.iter().map(|e| e.score.actionability).collect::<Vec<_>>());
        cves.push(CveScore {
            cve_id: record.cve_id.clone(),
            severity,
            ranking: exploits.iter().map(|e| e.artifact_id.clone()).collect(),
            exploits,
        });
    }

    let mut ranking: Vec<&CveScore> = cves.iter().collect();
    ranking.sort_by(|a, b| {
        b.severity
            .partial_cmp(&a.severity)
            .expect("severity is finite")
            .then_with(|| a.cve_id.cmp(&b.cve_id))
    });
    let scores = ScoresFile {
        evaluated_at: cfg.evaluated_at_for(&corpus),
        backend: backend_name,
        ranking: ranking.into_iter().map(|c| c.cve_id.clone()).collect(),
        cves,
    };

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    write_pretty_json(&cfg.out_dir.join(SCORES_FILE), &scores)?;
    let report = render_report(&scores, None);
    let report_path = cfg.out_dir.join(REPORT_FILE);
    std::fs::write(&report_path, report).map_err(|e| Error::io(&report_path, e))?;
    Ok(scores)
}

pub fn load_scores(out_dir: &Path) -> Result<ScoresFile> {
    let path = out_dir.join(SCORES_FILE);
    if !path.exists() {
        return Err(Error::Config(format!(
            "no scores at {}; run `aeas score` first",
            path.display()
        )));
    }
    let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::json(&path, e))
}

/// Top-k CVEs by severity from a scores file.
pub fn run_rank(out_dir: &Path, top_k: usize) -> Result<Vec<(String, f64)>> {
    if top_k < 1 {
        return Err(Error::InvalidArgument("--top-k must be at least 1".to_string()));
    }
    let scores = load_scores(out_dir)?;
    let by_id: BTreeMap<&str, f64> = scores.cves.iter().map(|c| (c.cve_id.as_str(), c.severity)).collect();
    Ok(scores
        .ranking
        .iter()
        .take(top_k)
        .map(|id| (id.clone(), by_id[id.as_str()]))
        .collect())
}

/// Ranking metrics over the labeled subset of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub cases: usize,
    pub cases_with_functional: usize,
    pub top1_success: Option<f64>,
    pub top2_success: Option<f64>,
    pub top3_success: Option<f64>,
    pub precision_at_1: Option<f64>,
    pub precision_at_2: Option<f64>,
    pub precision_at_3: Option<f64>,
    pub recall_top3_in_top3: Option<f64>,
    /// Analytic random-selection baseline: overall Functional fraction.
    pub random_select_baseline: Option<f64>,
}

/// Agreement between this engine's severities and one external baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineAgreement {
    pub baseline: String,
    /// CVEs present in both the scores and the baseline file.
    pub n: usize,
    /// Divisor applied to baseline scores before comparison (e.g. 10 for
    /// 0-10 scales), if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_by: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingMetrics>,
    pub baselines: Vec<BaselineAgreement>,
}

/// Build per-CVE ranking cases from scored output and ground-truth labels.
/// Labeled artifacts that were filtered out before scoring rank after all
/// scored ones (the engine implicitly predicted them least actionable).
pub fn build_cases(
    corpus: &[VulnerabilityRecord],
    scores: &ScoresFile,
    labels: &[crate::corpus::GroundTruthLabel],
) -> Result<Vec<RankingCase>> {
    let mut artifact_cve: BTreeMap<&str, &str> = BTreeMap::new();
    for record in corpus {
        for artifact in &record.exploits {
            artifact_cve.insert(&artifact.artifact_id, &record.cve_id);
        }
    }
    let mut by_cve: BTreeMap<String, BTreeMap<String, crate::corpus::GroundTruthLabel>> =
        BTreeMap::new();
    for label in labels {
        let cve = artifact_cve.get(label.artifact_id.as_str()).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "label references unknown artifact `{}`",
                label.artifact_id
            ))
        })?;
        by_cve
            .entry(cve.to_string())
            .or_default()
            .insert(label.artifact_id.clone(), label.clone());
    }

    let rankings: BTreeMap<&str, &[String]> = scores
        .cves
        .iter()
        .map(|c| (c.cve_id.as_str(), c.ranking.as_slice()))
        .collect();
    let mut cases = Vec::new();
    for (cve_id, labeled) in by_cve {
        let ranked = rankings.get(cve_id.as_str()).copied().unwrap_or(&[]);
        let mut order: Vec<String> = ranked
            .iter()
            .filter(|id| labeled.contains_key(*id))
            .cloned()
            .collect();
        for id in labeled.keys() {
            if !order.contains(id) {
                order.push(id.clone());
            }
        }
        cases.push(RankingCase { cve_id, predicted_order: order, labels: labeled });
    }
    Ok(cases)
}

fn metric_or_none(value: Result<f64>) -> Option<f64> {
    value.ok()
}

/// Compare scored output against ground-truth labels and baseline score
/// files; write `metrics.json`.
pub fn run_eval(
    cfg: &RunConfig,
    labels_path: &Path,
    baselines: &[(String, PathBuf)],
) -> Result<MetricsFile> {
    let corpus = load_corpus(&cfg.corpus_root)?;
    let scores = load_scores(&cfg.out_dir)?;

    let ranking = if labels_path.as_os_str().is_empty() {
        None
    } else {
        let labels = load_labels(labels_path)?;
        let cases = build_cases(&corpus, &scores, &labels)?;
        for case in &cases {
            case.validate()?;
        }
        let functional = cases
            .iter()
            .filter(|c| {
                c.labels.values().any(|l| {
                    l.maturity_observed == crate::corpus::MaturityObserved::Functional
                })
            })
            .count();
        Some(RankingMetrics {
            cases: cases.len(),
            cases_with_functional: functional,
            top1_success: metric_or_none(top_k_success(&cases, 1)),
            top2_success: metric_or_none(top_k_success(&cases, 2)),
            top3_success: metric_or_none(top_k_success(&cases, 3)),
            precision_at_1: metric_or_none(precision_at_k(&cases, 1)),
            precision_at_2: metric_or_none(precision_at_k(&cases, 2)),
            precision_at_3: metric_or_none(precision_at_k(&cases, 3)),
            recall_top3_in_top3: metric_or_none(recall_k_for_top_j(&cases, 3, 3)),
            random_select_baseline: metric_or_none(functional_fraction(&cases)),
        })
    };

    let severity_by_cve: BTreeMap<&str, f64> =
        scores.cves.iter().map(|c| (c.cve_id.as_str(), c.severity)).collect();
    let mut baseline_rows = Vec::new();
    for (name, path) in baselines {
        let raw = evalkit::load_baseline_csv(path)?;
        let shared: Vec<(&str, f64, f64)> = severity_by_cve
            .iter()
            .filter_map(|(cve, ours)| raw.get(*cve).map(|b| (*cve, *ours, *b)))
            .collect();
        let max_baseline = shared.iter().map(|(_, _, b)| *b).fold(0.0, f64::max);
        // Scores on a 0-10 scale (e.g. CVSS) are brought onto [0,1] so the
        // difference statistics are comparable.
        let divisor = if max_baseline > 1.0 { Some(10.0) } else { None };
        let ours: Vec<f64> = shared.iter().map(|(_, o, _)| *o).collect();
        let theirs: Vec<f64> = shared
            .iter()
            .map(|(_, _, b)| b / divisor.unwrap_or(1.0))
            .collect();
        let (agreement, note) = if shared.len() < 2 {
            (
                None,
                Some(format!(
                    "only {} shared CVE(s); need at least 2 for agreement statistics",
                    shared.len()
                )),
            )
        } else {
            (Some(score_agreement(&ours, &theirs)?), None)
        };
        baseline_rows.push(BaselineAgreement {
            baseline: name.clone(),
            n: shared.len(),
            normalized_by: divisor,
            agreement,
            note,
        });
    }

    let metrics = MetricsFile { ranking, baselines: baseline_rows };
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    write_pretty_json(&cfg.out_dir.join(METRICS_FILE), &metrics)?;
    Ok(metrics)
}

fn md_escape(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn fmt_rate(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

/// Render the Markdown report for a scores file, with an optional metrics
/// section appended.
pub fn render_report(scores: &ScoresFile, metrics: Option<&MetricsFile>) -> String {
    let mut out = String::new();
    let severity_by_cve: BTreeMap<&str, &CveScore> =
        scores.cves.iter().map(|c| (c.cve_id.as_str(), c)).collect();
    let total_exploits: usize = scores.cves.iter().map(|c| c.exploits.len()).sum();

    out.push_str("# Exploit Actionability Report\n\n");
    out.push_str(&format!(
        "Backend: {}. Evaluated at: {}. Vulnerabilities: {}. Exploits scored: {}.\n\n",
        scores.backend,
        scores.evaluated_at.to_rfc3339(),
        scores.cves.len(),
        total_exploits,
    ));

    out.push_str("## Vulnerability Ranking\n\n");
    out.push_str("| Rank | CVE | Severity | Exploits |\n|---|---|---|---|\n");
    for (i, cve_id) in scores.ranking.iter().enumerate() {
        let cve = severity_by_cve[cve_id.as_str()];
        out.push_str(&format!(
            "| {} | {} | {:.4} | {} |\n",
            i + 1,
            cve_id,
            cve.severity,
            cve.exploits.len()
        ));
    }
    out.push('\n');

    for cve_id in &scores.ranking {
        let cve = severity_by_cve[cve_id.as_str()];
        out.push_str(&format!("## {} — severity {:.4}\n\n", cve.cve_id, cve.severity));
        if cve.exploits.is_empty() {
            out.push_str("No usable exploit artifacts; severity defaults to 0.0.\n\n");
            continue;
        }
        for (i, exploit) in cve.exploits.iter().enumerate() {
            out.push_str(&format!(
                "### {}. {} — actionability {:.4}\n\n",
                i + 1,
                exploit.artifact_id,
                exploit.score.actionability
            ));
            out.push_str("| Feature | Value | Justification |\n|---|---|---|\n");
            for j in &exploit.score.justifications {
                out.push_str(&format!(
                    "| {} | {} | {} |\n",
                    md_escape(&j.feature),
                    md_escape(&j.value),
                    md_escape(&j.justification)
                ));
            }
            out.push('\n');
        }
    }

    if let Some(metrics) = metrics {
        out.push_str("## Evaluation Metrics\n\n");
        if let Some(r) = &metrics.ranking {
            out.push_str(&format!(
                "Labeled cases: {} ({} with a functional exploit).\n\n",
                r.cases, r.cases_with_functional
            ));
            out.push_str("| Metric | Value |\n|---|---|\n");
            out.push_str(&format!("| Top-1 success | {} |\n", fmt_rate(r.top1_success)));
            out.push_str(&format!("| Top-2 success | {} |\n", fmt_rate(r.top2_success)));
            out.push_str(&format!("| Top-3 success | {} |\n", fmt_rate(r.top3_success)));
            out.push_str(&format!("| Precision@1 | {} |\n", fmt_rate(r.precision_at_1)));
            out.push_str(&format!("| Precision@2 | {} |\n", fmt_rate(r.precision_at_2)));
            out.push_str(&format!("| Precision@3 | {} |\n", fmt_rate(r.precision_at_3)));
            out.push_str(&format!(
                "| Recall top-3 in top-3 | {} |\n",
                fmt_rate(r.recall_top3_in_top3)
            ));
            out.push_str(&format!(
                "| Random-select baseline | {} |\n",
                fmt_rate(r.random_select_baseline)
            ));
            out.push('\n');
        }
        for b in &metrics.baselines {
            out.push_str(&format!("### Baseline: {} (n = {})\n\n", md_escape(&b.baseline), b.n));
            if let Some(d) = b.normalized_by {
                out.push_str(&format!("Baseline scores divided by {d} before comparison.\n\n"));
            }
            match &b.agreement {
                Some(a) => {
                    out.push_str("| Statistic | Value |\n|---|---|\n");
                    out.push_str(&format!("| Mean difference | {:.4} |\n", a.mean_diff));
                    out.push_str(&format!("| SD of differences | {:.4} |\n", a.sd_diff));
                    out.push_str(&format!(
                        "| Limits of agreement | [{:.4}, {:.4}] |\n",
                        a.limits.0, a.limits.1
                    ));
                    out.push_str(&format!(
                        "| Outside limits | {} ({:.1}%) |\n",
                        a.n_outside, a.pct_outside
                    ));
                    out.push_str(&format!(
                        "| Pearson r | {} |\n",
                        a.pearson.map_or("n/a".to_string(), |v| format!("{v:.4}"))
                    ));
                    out.push_str(&format!(
                        "| Spearman ρ | {} |\n",
                        a.spearman.map_or("n/a".to_string(), |v| format!("{v:.4}"))
                    ));
                    out.push_str(&format!("| MAE | {:.4} |\n", a.mae));
                    out.push_str(&format!("| RMSE | {:.4} |\n", a.rmse));
                }
                None => {
                    if let Some(note) = &b.note {
                        out.push_str(&format!("{}\n", md_escape(note)));
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Re-render `report.md` from persisted scores (and metrics when present).
pub fn run_report(out_dir: &Path) -> Result<String> {
    let scores = load_scores(out_dir)?;
    let metrics_path = out_dir.join(METRICS_FILE);
    let metrics: Option<MetricsFile> = if metrics_path.exists() {
        let raw = std::fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        Some(serde_json::from_str(&raw).map_err(|e| Error::json(&metrics_path, e))?)
    } else {
        None
    };
    let report = render_report(&scores, metrics.as_ref());
    let report_path = out_dir.join(REPORT_FILE);
    std::fs::write(&report_path, &report).map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}
