//! Sub-feature extraction: retrieval-augmented prompting of a pluggable
//! backend, strict structured-output parsing, bounded retries, and
//! conservative defaults on failure.
//!
//! The unit of work is one (artifact, sub-feature) task. Sixteen tasks per
//! artifact produce a complete [`FeatureVector`]; scoring never sees a
//! partial one.

pub mod backend;
pub mod parse;
pub mod prompt;
pub mod retrieval;
pub mod rules;

pub use backend::{Backend, LiveBackend, TaskContext};
pub use parse::{finding_to_response, parse_finding};
pub use prompt::{build_prompt, PromptSpec};
pub use retrieval::{chunk_documents, index_and_retrieve, Chunk};
pub use rules::RulesBackend;

use serde::{Deserialize, Serialize};

use crate::corpus::{ExploitArtifact, WebDocument};

/// The sixteen extracted sub-features (popularity counts are observed, not
/// extracted, and live in [`PopularityInputs`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum SubFeature {
    IsRemote,
    InfoDependency,
    AttackCondition,
    ProbabilityDep,
    UserInteraction,
    PrivilegeRequired,
    Evasion,
    CodeExec,
    PrivEscalation,
    InfoLeak,
    Bypass,
    Dos,
    Relevance,
    Availability,
    Flexibility,
    Functionality,
}

impl SubFeature {
    pub const ALL: [SubFeature; 16] = [
        SubFeature::IsRemote,
        SubFeature::InfoDependency,
        SubFeature::AttackCondition,
        SubFeature::ProbabilityDep,
        SubFeature::UserInteraction,
        SubFeature::PrivilegeRequired,
        SubFeature::Evasion,
        SubFeature::CodeExec,
        SubFeature::PrivEscalation,
        SubFeature::InfoLeak,
        SubFeature::Bypass,
        SubFeature::Dos,
        SubFeature::Relevance,
        SubFeature::Availability,
        SubFeature::Flexibility,
        SubFeature::Functionality,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SubFeature::IsRemote => "is_remote",
            SubFeature::InfoDependency => "info_dependency",
            SubFeature::AttackCondition => "attack_condition",
            SubFeature::ProbabilityDep => "probability_dep",
            SubFeature::UserInteraction => "user_interaction",
            SubFeature::PrivilegeRequired => "privilege_required",
            SubFeature::Evasion => "evasion",
            SubFeature::CodeExec => "code_exec",
            SubFeature::PrivEscalation => "priv_escalation",
            SubFeature::InfoLeak => "info_leak",
            SubFeature::Bypass => "bypass",
            SubFeature::Dos => "dos",
            SubFeature::Relevance => "relevance",
            SubFeature::Availability => "availability",
            SubFeature::Flexibility => "flexibility",
            SubFeature::Functionality => "functionality",
        }
    }
}

impl std::fmt::Display for SubFeature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum PrivilegeLevel {
    None,
    User,
    Admin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Conclusion {
    Flag(bool),
    Privilege(PrivilegeLevel),
}

impl Conclusion {
    /// Boolean view; a privilege conclusion reads as "some privilege
    /// required".
    pub fn as_flag(&self) -> bool {
        match self {
            Conclusion::Flag(b) => *b,
            Conclusion::Privilege(p) => *p != PrivilegeLevel::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub file: String,
    pub line: u64,
    pub technique: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubFeatureFinding {
    pub subfeature: SubFeature,
    pub evidence: Vec<Evidence>,
    pub conclusion: Conclusion,
    /// 1-5 self-assessed certainty; 1 marks conservative fallbacks.
    pub confidence: u8,
}

impl SubFeatureFinding {
    /// The conservative value assumed when extraction fails: prerequisites
    /// absent-of-evidence read as false, privilege as admin, confidence 1.
    pub fn conservative(subfeature: SubFeature) -> Self {
        let conclusion = if subfeature == SubFeature::PrivilegeRequired {
            Conclusion::Privilege(PrivilegeLevel::Admin)
        } else {
            Conclusion::Flag(false)
        };
        SubFeatureFinding { subfeature, evidence: Vec::new(), conclusion, confidence: 1 }
    }
}

/// Complete per-artifact extraction result: exactly one finding per
/// sub-feature, by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub is_remote: SubFeatureFinding,
    pub info_dependency: SubFeatureFinding,
    pub attack_condition: SubFeatureFinding,
    pub probability_dep: SubFeatureFinding,
    pub user_interaction: SubFeatureFinding,
    pub privilege_required: SubFeatureFinding,
    pub evasion: SubFeatureFinding,
    pub code_exec: SubFeatureFinding,
    pub priv_escalation: SubFeatureFinding,
    pub info_leak: SubFeatureFinding,
    pub bypass: SubFeatureFinding,
    pub dos: SubFeatureFinding,
    pub relevance: SubFeatureFinding,
    pub availability: SubFeatureFinding,
    pub flexibility: SubFeatureFinding,
    pub functionality: SubFeatureFinding,
}

impl FeatureVector {
    /// All-conservative vector (used for artifacts with no analyzable text).
    pub fn conservative() -> Self {
        let f = SubFeatureFinding::conservative;
        FeatureVector {
            is_remote: f(SubFeature::IsRemote),
            info_dependency: f(SubFeature::InfoDependency),
            attack_condition: f(SubFeature::AttackCondition),
            probability_dep: f(SubFeature::ProbabilityDep),
            user_interaction: f(SubFeature::UserInteraction),
            privilege_required: f(SubFeature::PrivilegeRequired),
            evasion: f(SubFeature::Evasion),
            code_exec: f(SubFeature::CodeExec),
            priv_escalation: f(SubFeature::PrivEscalation),
            info_leak: f(SubFeature::InfoLeak),
            bypass: f(SubFeature::Bypass),
            dos: f(SubFeature::Dos),
            relevance: f(SubFeature::Relevance),
            availability: f(SubFeature::Availability),
            flexibility: f(SubFeature::Flexibility),
            functionality: f(SubFeature::Functionality),
        }
    }

    pub fn get(&self, sf: SubFeature) -> &SubFeatureFinding {
        match sf {
            SubFeature::IsRemote => &self.is_remote,
            SubFeature::InfoDependency => &self.info_dependency,
            SubFeature::AttackCondition => &self.attack_condition,
            SubFeature::ProbabilityDep => &self.probability_dep,
            SubFeature::UserInteraction => &self.user_interaction,
            SubFeature::PrivilegeRequired => &self.privilege_required,
            SubFeature::Evasion => &self.evasion,
            SubFeature::CodeExec => &self.code_exec,
            SubFeature::PrivEscalation => &self.priv_escalation,
            SubFeature::InfoLeak => &self.info_leak,
            SubFeature::Bypass => &self.bypass,
            SubFeature::Dos => &self.dos,
            SubFeature::Relevance => &self.relevance,
            SubFeature::Availability => &self.availability,
            SubFeature::Flexibility => &self.flexibility,
            SubFeature::Functionality => &self.functionality,
        }
    }

    fn get_mut(&mut self, sf: SubFeature) -> &mut SubFeatureFinding {
        match sf {
            SubFeature::IsRemote => &mut self.is_remote,
            SubFeature::InfoDependency => &mut self.info_dependency,
            SubFeature::AttackCondition => &mut self.attack_condition,
            SubFeature::ProbabilityDep => &mut self.probability_dep,
            SubFeature::UserInteraction => &mut self.user_interaction,
            SubFeature::PrivilegeRequired => &mut self.privilege_required,
            SubFeature::Evasion => &mut self.evasion,
            SubFeature::CodeExec => &mut self.code_exec,
            SubFeature::PrivEscalation => &mut self.priv_escalation,
            SubFeature::InfoLeak => &mut self.info_leak,
            SubFeature::Bypass => &mut self.bypass,
            SubFeature::Dos => &mut self.dos,
            SubFeature::Relevance => &mut self.relevance,
            SubFeature::Availability => &mut self.availability,
            SubFeature::Flexibility => &mut self.flexibility,
            SubFeature::Functionality => &mut self.functionality,
        }
    }

    /// Boolean conclusion for a flag sub-feature.
    pub fn flag(&self, sf: SubFeature) -> bool {
        self.get(sf).conclusion.as_flag()
    }

    pub fn privilege(&self) -> PrivilegeLevel {
        match self.privilege_required.conclusion {
            Conclusion::Privilege(p) => p,
            // Unreachable through this crate's constructors; a flag read as
            // privilege falls back to the conservative extreme.
            Conclusion::Flag(_) => PrivilegeLevel::Admin,
        }
    }

    pub fn findings(&self) -> impl Iterator<Item = &SubFeatureFinding> {
        SubFeature::ALL.iter().map(move |sf| self.get(*sf))
    }
}

/// Observed popularity counts for one exploit artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularityInputs {
    pub n_exploits: u64,
    pub stars: u64,
    pub forks: u64,
}

#[derive(Debug, Clone)]
pub struct AnalyzerConfig {
    /// Retries after a failed attempt (so `retry_limit + 1` total attempts).
    pub retry_limit: u32,
    /// Chunks of retrieved context per prompt.
    pub retrieval_k: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { retry_limit: 2, retrieval_k: 4 }
    }
}

/// Retrieval query terms per task; tuned to pull the most relevant chunks
/// of artifact text into the prompt.
fn task_query(task: SubFeature) -> &'static str {
    match task {
        SubFeature::IsRemote => "remote network http url socket request target host port",
        SubFeature::InfoDependency => {
            "credentials password token secret key session username hardcoded"
        }
        SubFeature::AttackCondition => {
            "requires condition configuration enabled version timing race"
        }
        SubFeature::ProbabilityDep => "brute force retry random probability success rate spray",
        SubFeature::UserInteraction => "user victim click open interaction phishing social",
        SubFeature::PrivilegeRequired => {
            "privilege root sudo admin authenticated user account login"
        }
        SubFeature::Evasion => "evasion bypass antivirus edr obfuscate sandbox defender encode",
        SubFeature::CodeExec => "code execution command shell rce exec system payload",
        SubFeature::PrivEscalation => "privilege escalation escalate root setuid elevate token",
        SubFeature::InfoLeak => "leak disclosure read file dump memory traversal exfiltrate",
        SubFeature::Bypass => "bypass authentication validation filter restriction signature",
        SubFeature::Dos => "denial service crash exhaustion segfault panic loop",
        SubFeature::Relevance => "cve vulnerability exploit poc proof concept",
        SubFeature::Availability => "exploit script source code implementation",
        SubFeature::Flexibility => "argument option target configuration parameter customize",
        SubFeature::Functionality => "successfully tested working verified shell obtained",
    }
}

/// Evidence whose `file` does not name an artifact file or document URL is
/// dropped; findings must only cite content that exists.
fn sanitize_evidence(finding: &mut SubFeatureFinding, artifact: &ExploitArtifact) {
    let labels = artifact.evidence_labels();
    finding.evidence.retain(|e| labels.contains(e.file.as_str()));
}

/// Extract all sixteen sub-features for one artifact. Total: backend and
/// parse failures are retried, then absorbed by conservative defaults, so
/// every call yields a complete vector.
pub fn extract_features(
    artifact: &ExploitArtifact,
    backend: &dyn Backend,
    cfg: &AnalyzerConfig,
) -> FeatureVector {
    let mut vector = FeatureVector::conservative();
    if artifact.has_no_text() {
        return vector;
    }

    let units: Vec<(String, String)> = artifact
        .textual_units()
        .map(|(label, text)| (label.to_string(), text.to_string()))
        .collect();

    for task in SubFeature::ALL {
        let snippets: Vec<String> = index_and_retrieve(task_query(task), &units, cfg.retrieval_k)
            .into_iter()
            .map(|c| format!("{}: {}", c.label, c.text))
            .collect();
        let base_prompt = build_prompt(task, artifact, &snippets);
        let mut prompt = base_prompt.clone();

        let mut resolved = None;
        for attempt in 0..=cfg.retry_limit {
            let ctx = TaskContext { artifact, snippets: &snippets, prompt: &prompt };
            match backend.analyze(task, &ctx) {
                Ok(raw) => match parse_finding(&raw, task) {
                    Ok(finding) => {
                        resolved = Some(finding);
                        break;
                    }
                    Err(err) => {
                        log::warn!(
                            "{}/{task}: attempt {} response rejected: {err}",
                            artifact.artifact_id,
                            attempt + 1
                        );
                        prompt = format!(
                            "{base_prompt}\nYour previous response was invalid: {err}\n\
                             Respond again, following the output format exactly."
                        );
                    }
                },
                Err(err) => {
                    log::warn!(
                        "{}/{task}: attempt {} backend failure: {err}",
                        artifact.artifact_id,
                        attempt + 1
                    );
                }
            }
        }

        if let Some(mut finding) = resolved {
            sanitize_evidence(&mut finding, artifact);
            *vector.get_mut(task) = finding;
        } else {
            log::warn!(
                "{}/{task}: retries exhausted, applying conservative default",
                artifact.artifact_id
            );
        }
    }
    vector
}

/// Keep or drop a web document before it enters extraction context.
pub fn filter_document(doc: &WebDocument, backend: &dyn Backend) -> bool {
    backend.keep_document(doc)
}
