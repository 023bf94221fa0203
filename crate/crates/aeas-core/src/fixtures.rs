//! Bundled synthetic corpus for tests, demos, and offline runs.
//!
//! The `fixtures/` directory at the workspace root holds a small corpus in
//! the standard on-disk layout, ground-truth labels, baseline CSVs, a
//! golden manifest of expected pipeline outputs, and recorded completion
//! cache entries. Everything here is inert: the "exploits" are text shaped
//! like exploit tooling, targeting fictional software, with no working
//! payloads.
//!
//! The golden manifest pins the full-pipeline result under the `rules`
//! backend and default configuration. [`verify_fixtures`] re-runs the
//! pipeline and reports divergences field by field, so any behavior change
//! that shifts rankings or severities is caught immediately.
//! [`record_cache`] replays the same extraction through a recording
//! adapter, persisting each response under the completion key a live
//! backend would use — which is what lets `--backend live --offline` work
//! against the bundled corpus without any network access.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::analyzer::{Backend, RulesBackend, SubFeature, TaskContext};
use crate::connectors::{completion_key, CacheEntry, CompletionCache};
use crate::corpus::WebDocument;
use crate::error::{Error, Result};
use crate::pipeline::{
    run_extract, run_filter, run_score, BackendChoice, ConfigFile, Overrides, RunConfig,
};

/// Current golden-manifest format version.
pub const FIXTURE_MANIFEST_VERSION: &str = "1";

/// File name of the golden manifest inside the fixture root.
pub const FIXTURE_MANIFEST_FILE: &str = "manifest.json";

/// Subdirectory of the fixture root holding recorded completions.
pub const FIXTURE_CACHE_DIR: &str = "cache";

/// Timestamp stamped on recorded cache entries, fixed so regeneration is
/// byte-identical.
pub fn fixture_recorded_at() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).single().expect("valid timestamp")
}

/// Expected full-pipeline outputs for the bundled corpus under the `rules`
/// backend and default configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureManifest {
    pub version: String,
    /// Per CVE: artifact ids by descending actionability.
    pub expected_rankings: BTreeMap<String, Vec<String>>,
    /// Per CVE: maximum actionability over its exploits.
    pub expected_severities: BTreeMap<String, f64>,
}

/// Severities are compared against regenerated values to this tolerance;
/// effectively exact, while tolerant of JSON round-tripping.
const SEVERITY_TOLERANCE: f64 = 1e-12;

/// Root of the fixtures shipped with this workspace.
pub fn bundled_fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load_fixture_manifest(fixture_root: &Path) -> Result<FixtureManifest> {
    let path = fixture_root.join(FIXTURE_MANIFEST_FILE);
    let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::json(&path, e))
}

/// Default-configuration run over the fixture corpus, writing to `out_dir`.
fn fixture_run_config(fixture_root: &Path, out_dir: &Path) -> Result<RunConfig> {
    RunConfig::resolve(
        ConfigFile::default(),
        Overrides {
            corpus: Some(fixture_root.join("corpus")),
            out: Some(out_dir.to_path_buf()),
            backend: Some(BackendChoice::Rules),
            offline: true,
            cache_dir: None,
        },
    )
}

/// Run filter → extract (`rules`) → score over the fixture corpus in a
/// scratch directory and distill the outputs into a manifest.
pub fn generate_fixture_manifest(fixture_root: &Path) -> Result<FixtureManifest> {
    let scratch = tempfile::tempdir().map_err(|e| Error::io(fixture_root, e))?;
    let cfg = fixture_run_config(fixture_root, scratch.path())?;
    run_filter(&cfg)?;
    run_extract(&cfg, &RulesBackend::new())?;
    let scores = run_score(&cfg)?;
    Ok(FixtureManifest {
        version: FIXTURE_MANIFEST_VERSION.to_string(),
        expected_rankings: scores
            .cves
            .iter()
            .map(|c| (c.cve_id.clone(), c.ranking.clone()))
            .collect(),
        expected_severities: scores.cves.iter().map(|c| (c.cve_id.clone(), c.severity)).collect(),
    })
}

fn fmt_ranking(ids: &[String]) -> String {
    format!("[{}]", ids.join(", "))
}

/// Compare an expected manifest against freshly regenerated outputs.
/// Divergences are reported in both directions (missing and unexpected
/// CVEs, ranking mismatches, severity mismatches).
fn diff_manifests(expected: &FixtureManifest, actual: &FixtureManifest) -> Vec<String> {
    let mut divergences = Vec::new();

    if expected.version != actual.version {
        divergences.push(format!(
            "manifest version: expected {}, regenerated {}",
            expected.version, actual.version
        ));
    }

    for (cve_id, want) in &expected.expected_rankings {
        match actual.expected_rankings.get(cve_id) {
            None => divergences.push(format!("{cve_id}: missing from regenerated rankings")),
            Some(got) if got != want => divergences.push(format!(
                "{cve_id}: ranking diverges: expected {}, got {}",
                fmt_ranking(want),
                fmt_ranking(got)
            )),
            Some(_) => {}
        }
    }
    for cve_id in actual.expected_rankings.keys() {
        if !expected.expected_rankings.contains_key(cve_id) {
            divergences.push(format!("{cve_id}: regenerated ranking not in fixture manifest"));
        }
    }

    for (cve_id, want) in &expected.expected_severities {
        match actual.expected_severities.get(cve_id) {
            None => divergences.push(format!("{cve_id}: missing from regenerated severities")),
            Some(got) if (got - want).abs() > SEVERITY_TOLERANCE => divergences.push(format!(
                "{cve_id}: severity diverges: expected {want}, got {got}"
            )),
            Some(_) => {}
        }
    }
    for cve_id in actual.expected_severities.keys() {
        if !expected.expected_severities.contains_key(cve_id) {
            divergences.push(format!("{cve_id}: regenerated severity not in fixture manifest"));
        }
    }

    divergences
}

/// Re-run the full pipeline over a fixture root and compare against its
/// golden manifest. An empty list means the fixtures verify clean.
pub fn verify_fixtures(fixture_root: &Path) -> Result<Vec<String>> {
    let expected = load_fixture_manifest(fixture_root)?;
    let actual = generate_fixture_manifest(fixture_root)?;
    Ok(diff_manifests(&expected, &actual))
}

/// [`verify_fixtures`] over the workspace's bundled fixture root.
pub fn verify_bundled_fixtures() -> Result<Vec<String>> {
    verify_fixtures(&bundled_fixture_root())
}

/// Backend adapter that answers with the rules backend while persisting
/// every response into a completion cache under the key a live backend
/// would compute for the same prompt. Running an extraction through this
/// adapter warms the cache for later offline live-backend runs.
pub struct RecordingRulesBackend {
    inner: RulesBackend,
    cache: CompletionCache,
    model_name: String,
    temperature: f64,
    stored_at: DateTime<Utc>,
    written: AtomicUsize,
}

impl RecordingRulesBackend {
    pub fn new(
        cache: CompletionCache,
        model_name: impl Into<String>,
        temperature: f64,
        stored_at: DateTime<Utc>,
    ) -> Self {
        RecordingRulesBackend {
            inner: RulesBackend::new(),
            cache,
            model_name: model_name.into(),
            temperature,
            stored_at,
            written: AtomicUsize::new(0),
        }
    }

    /// Responses persisted so far.
    pub fn recorded(&self) -> usize {
        self.written.load(Ordering::SeqCst)
    }
}

impl Backend for RecordingRulesBackend {
    fn name(&self) -> &'static str {
        "rules"
    }

    fn analyze(&self, task: SubFeature, ctx: &TaskContext<'_>) -> Result<String> {
        let raw = self.inner.analyze(task, ctx)?;
        let key = completion_key(&self.model_name, ctx.prompt, self.temperature);
        self.cache.put(&CacheEntry {
            key,
            response_text: raw.clone(),
            stored_at: self.stored_at,
        })?;
        self.written.fetch_add(1, Ordering::SeqCst);
        Ok(raw)
    }

    fn keep_document(&self, doc: &WebDocument) -> bool {
        self.inner.keep_document(doc)
    }
}

/// Warm `cache_dir` with one completion per (artifact, sub-feature) pair of
/// the fixture corpus, keyed for `model_name` at `temperature`. Returns the
/// number of responses recorded. Pipeline outputs go to a scratch directory
/// and are discarded; the cache is the product.
pub fn record_cache(
    fixture_root: &Path,
    cache_dir: &Path,
    model_name: &str,
    temperature: f64,
    stored_at: DateTime<Utc>,
) -> Result<usize> {
    let scratch = tempfile::tempdir().map_err(|e| Error::io(fixture_root, e))?;
    let cfg = fixture_run_config(fixture_root, scratch.path())?;
    let backend = RecordingRulesBackend::new(
        CompletionCache::new(cache_dir),
        model_name,
        temperature,
        stored_at,
    );
    run_extract(&cfg, &backend)?;
    Ok(backend.recorded())
}

/// Warm the bundled fixture cache with the default connector settings.
pub fn record_bundled_cache() -> Result<usize> {
    let root = bundled_fixture_root();
    let connectors = crate::pipeline::ConnectorsConfig::default();
    record_cache(
        &root,
        &root.join(FIXTURE_CACHE_DIR),
        &connectors.model_name,
        connectors.temperature,
        fixture_recorded_at(),
    )
}
