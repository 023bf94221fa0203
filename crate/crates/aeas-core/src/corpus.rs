//! Data model and on-disk corpus layout.
//!
//! A corpus root holds one directory per CVE:
//!
//! ```text
//! <root>/<CVE-ID>/meta.json
//! <root>/<CVE-ID>/artifacts/<artifact-id>/repo.json
//! <root>/<CVE-ID>/artifacts/<artifact-id>/docs.json      (optional)
//! <root>/<CVE-ID>/artifacts/<artifact-id>/<raw files...>
//! ```
//!
//! `repo.json` carries repository metadata plus an optional `kind_overrides`
//! map for files whose kind cannot be inferred from the extension.
//! `docs.json` holds web documents fetched for the artifact (source URL +
//! extracted text). Ground-truth labels live in a separate JSON Lines file,
//! one label object per line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn cve_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^CVE-\d{4}-\d{4,}$").unwrap())
}

/// One CVE with its application context, optional baseline scores, and
/// candidate exploit artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityRecord {
    pub cve_id: String,
    pub application: String,
    pub published: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epss: Option<f64>,
    #[serde(default)]
    pub exploits: Vec<ExploitArtifact>,
}

/// Repository metadata feeding the elimination / prioritization heuristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoMeta {
    pub repo_id: String,
    pub description_len: u64,
    pub issue_count: u64,
    #[serde(default)]
    pub topic_labels: Vec<String>,
    pub size_bytes: u64,
    pub stars: u64,
    pub forks: u64,
    pub created_at: DateTime<Utc>,
}

/// File classification. Inferred from the extension, overridable per file
/// in `repo.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Source,
    Readme,
    Doc,
    Binary,
    Media,
    Config,
}

impl FileKind {
    pub fn is_textual(self) -> bool {
        !matches!(self, FileKind::Binary | FileKind::Media)
    }

    /// Classify a path by its file name and extension. Unknown extensions
    /// (and extensionless files) fall back to `Binary`; use `kind_overrides`
    /// for exceptions.
    pub fn infer(path: &str) -> FileKind {
        let name = path.rsplit('/').next().unwrap_or(path).to_ascii_lowercase();
        if name.starts_with("readme") {
            return FileKind::Readme;
        }
        let ext = name.rsplit_once('.').map(|(_, e)| e).unwrap_or("");
        match ext {
            "py" | "rb" | "c" | "h" | "cpp" | "cc" | "hpp" | "java" | "js" | "ts" | "go"
            | "rs" | "sh" | "bash" | "pl" | "php" | "cs" | "ps1" | "lua" | "swift" | "kt"
            | "scala" | "asm" | "s" => FileKind::Source,
            "md" | "txt" | "rst" | "adoc" | "org" | "html" | "htm" => FileKind::Doc,
            "xml" | "yml" | "yaml" | "json" | "toml" | "ini" | "cfg" | "conf"
            | "properties" | "env" | "lock" => FileKind::Config,
            "png" | "jpg" | "jpeg" | "gif" | "bmp" | "svg" | "ico" | "mp3" | "mp4" | "wav"
            | "avi" | "mov" | "webm" | "webp" => FileKind::Media,
            _ => FileKind::Binary,
        }
    }
}

/// One file retained from an exploit repository. `content` is populated
/// iff the kind is textual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactFile {
    pub path: String,
    pub kind: FileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
}

/// A web document fetched for an artifact (blog post, writeup, advisory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebDocument {
    pub source_url: String,
    pub text: String,
}

/// One candidate exploit: repository metadata, retained files, retained
/// documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitArtifact {
    pub artifact_id: String,
    pub repo: RepoMeta,
    #[serde(default)]
    pub files: Vec<ArtifactFile>,
    #[serde(default)]
    pub docs: Vec<WebDocument>,
}

impl ExploitArtifact {
    /// Iterate over textual units: file contents first (by path order),
    /// then web documents. Labels are file paths or source URLs.
    pub fn textual_units(&self) -> impl Iterator<Item = (&str, &str)> {
        self.files
            .iter()
            .filter_map(|f| f.content.as_deref().map(|c| (f.path.as_str(), c)))
            .chain(self.docs.iter().map(|d| (d.source_url.as_str(), d.text.as_str())))
    }

    /// True when the artifact carries neither textual file content nor docs.
    pub fn has_no_text(&self) -> bool {
        self.textual_units().next().is_none()
    }

    /// Known evidence labels: file paths plus doc source URLs.
    pub fn evidence_labels(&self) -> BTreeSet<&str> {
        self.files
            .iter()
            .map(|f| f.path.as_str())
            .chain(self.docs.iter().map(|d| d.source_url.as_str()))
            .collect()
    }
}

/// Observed maturity classes from manual exploit verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaturityObserved {
    NonFunctional,
    DocOnly,
    PoC,
    Functional,
}

/// One manually assessed exploit: what it achieved, how long it took, and
/// how many fixes were needed along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub artifact_id: String,
    pub maturity_observed: MaturityObserved,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_minutes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_count: Option<u64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct MetaJson {
    cve_id: String,
    application: String,
    published: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cvss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epss: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RepoJson {
    #[serde(flatten)]
    meta: RepoMeta,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    kind_overrides: BTreeMap<String, FileKind>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::json(path, e))
}

fn validate_range(path: &Path, field: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&value) || !value.is_finite() {
        return Err(Error::validation(
            path,
            field,
            format!("{value} outside [{lo}, {hi}]"),
        ));
    }
    Ok(())
}

fn validate_meta(path: &Path, meta: &MetaJson) -> Result<()> {
    if !cve_pattern().is_match(&meta.cve_id) {
        return Err(Error::validation(
            path,
            "cve_id",
            format!("`{}` does not match CVE-\\d{{4}}-\\d{{4,}}", meta.cve_id),
        ));
    }
    if let Some(cvss) = meta.cvss {
        validate_range(path, "cvss", cvss, 0.0, 10.0)?;
    }
    if let Some(epss) = meta.epss {
        validate_range(path, "epss", epss, 0.0, 1.0)?;
    }
    Ok(())
}

fn validate_repo(path: &Path, repo: &RepoMeta) -> Result<()> {
    if repo.repo_id.is_empty() {
        return Err(Error::validation(path, "repo_id", "empty"));
    }
    if repo.created_at > Utc::now() {
        return Err(Error::validation(
            path,
            "created_at",
            format!("{} is in the future", repo.created_at.to_rfc3339()),
        ));
    }
    Ok(())
}

fn sorted_dir_names(root: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

pub(crate) fn load_artifact(dir: &Path, artifact_id: &str) -> Result<ExploitArtifact> {
    let repo_path = dir.join("repo.json");
    let repo_json: RepoJson = read_json(&repo_path)?;
    validate_repo(&repo_path, &repo_json.meta)?;

    let docs_path = dir.join("docs.json");
    let docs: Vec<WebDocument> = if docs_path.exists() {
        read_json(&docs_path)?
    } else {
        Vec::new()
    };

    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            Error::io(dir, std::io::Error::new(std::io::ErrorKind::Other, e))
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .expect("walkdir stays under dir")
            .to_string_lossy()
            .replace('\\', "/");
        if rel == "repo.json" || rel == "docs.json" {
            continue;
        }
        let kind = repo_json
            .kind_overrides
            .get(&rel)
            .copied()
            .unwrap_or_else(|| FileKind::infer(&rel));
        let content = if kind.is_textual() {
            Some(
                fs::read_to_string(entry.path())
                    .map_err(|e| Error::io(entry.path(), e))?,
            )
        } else {
            None
        };
        files.push(ArtifactFile {
            path: rel,
            kind,
            content,
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(ExploitArtifact {
        artifact_id: artifact_id.to_string(),
        repo: repo_json.meta,
        files,
        docs,
    })
}

/// Load a corpus from the documented on-disk layout. Records are validated
/// against type invariants and returned in deterministic `cve_id` order,
/// independent of filesystem enumeration order.
pub fn load_corpus(root: &Path) -> Result<Vec<VulnerabilityRecord>> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for dir_name in sorted_dir_names(root)? {
        let cve_dir = root.join(&dir_name);
        let meta_path = cve_dir.join("meta.json");
        let meta: MetaJson = read_json(&meta_path)?;
        validate_meta(&meta_path, &meta)?;
        if meta.cve_id != dir_name {
            return Err(Error::validation(
                &meta_path,
                "cve_id",
                format!("`{}` does not match directory `{dir_name}`", meta.cve_id),
            ));
        }
        if !seen.insert(meta.cve_id.clone()) {
            return Err(Error::DuplicateCve(meta.cve_id));
        }

        let mut exploits = Vec::new();
        let artifacts_dir = cve_dir.join("artifacts");
        if artifacts_dir.exists() {
            let mut ids_seen = BTreeSet::new();
            for artifact_id in sorted_dir_names(&artifacts_dir)? {
                if !ids_seen.insert(artifact_id.clone()) {
                    return Err(Error::DuplicateArtifact {
                        cve: meta.cve_id.clone(),
                        artifact: artifact_id,
                    });
                }
                exploits.push(load_artifact(&artifacts_dir.join(&artifact_id), &artifact_id)?);
            }
        }

        records.push(VulnerabilityRecord {
            cve_id: meta.cve_id,
            application: meta.application,
            published: meta.published,
            cvss: meta.cvss,
            epss: meta.epss,
            exploits,
        });
    }
    records.sort_by(|a, b| a.cve_id.cmp(&b.cve_id));
    Ok(records)
}

/// Write a corpus back out in the documented layout. Inverse of
/// [`load_corpus`]: a written corpus re-loads to an equal value.
pub fn write_corpus(corpus: &[VulnerabilityRecord], root: &Path) -> Result<()> {
    for record in corpus {
        let cve_dir = root.join(&record.cve_id);
        fs::create_dir_all(&cve_dir).map_err(|e| Error::io(&cve_dir, e))?;
        let meta = MetaJson {
            cve_id: record.cve_id.clone(),
            application: record.application.clone(),
            published: record.published,
            cvss: record.cvss,
            epss: record.epss,
        };
        write_pretty_json(&cve_dir.join("meta.json"), &meta)?;
        for artifact in &record.exploits {
            let art_dir = cve_dir.join("artifacts").join(&artifact.artifact_id);
            fs::create_dir_all(&art_dir).map_err(|e| Error::io(&art_dir, e))?;

            // Record explicit kinds for anything inference would misclassify.
            let mut overrides = BTreeMap::new();
            for f in &artifact.files {
                if FileKind::infer(&f.path) != f.kind {
                    overrides.insert(f.path.clone(), f.kind);
                }
            }
            let repo = RepoJson {
                meta: artifact.repo.clone(),
                kind_overrides: overrides,
            };
            write_pretty_json(&art_dir.join("repo.json"), &repo)?;
            if !artifact.docs.is_empty() {
                write_pretty_json(&art_dir.join("docs.json"), &artifact.docs)?;
            }
            for f in &artifact.files {
                let path = art_dir.join(&f.path);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                match &f.content {
                    Some(text) => fs::write(&path, text).map_err(|e| Error::io(&path, e))?,
                    None => fs::write(&path, []).map_err(|e| Error::io(&path, e))?,
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut raw = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    raw.push('\n');
    fs::write(path, raw).map_err(|e| Error::io(path, e))
}

/// Load ground-truth labels from a JSON Lines file, one label per line.
/// Blank lines are skipped. Resolution of artifact ids against a corpus is
/// deferred to the evaluation stage.
pub fn load_labels(path: &Path) -> Result<Vec<GroundTruthLabel>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let label: GroundTruthLabel = serde_json::from_str(line).map_err(|e| {
            Error::validation(path, "label", format!("line {}: {e}", idx + 1))
        })?;
        if let Some(minutes) = label.completion_minutes {
            if !(minutes >= 0.0) || !minutes.is_finite() {
                return Err(Error::validation(
                    path,
                    "completion_minutes",
                    format!("line {}: {minutes} is negative or non-finite", idx + 1),
                ));
            }
        }
        labels.push(label);
    }
    Ok(labels)
}

/// Latest timestamp present in the corpus (repo creation times and CVE
/// publication dates). Serves as the deterministic default reference time
/// for repository age so outputs stay pure functions of their inputs.
pub fn corpus_reference_time(corpus: &[VulnerabilityRecord]) -> DateTime<Utc> {
    let mut latest: Option<DateTime<Utc>> = None;
    for record in corpus {
        let published = record
            .published
            .and_hms_opt(0, 0, 0)
            .expect("midnight is valid")
            .and_utc();
        latest = Some(latest.map_or(published, |t| t.max(published)));
        for artifact in &record.exploits {
            let created = artifact.repo.created_at;
            latest = Some(latest.map_or(created, |t| t.max(created)));
        }
    }
    latest.unwrap_or_else(|| DateTime::<Utc>::from_timestamp(0, 0).expect("epoch"))
}
