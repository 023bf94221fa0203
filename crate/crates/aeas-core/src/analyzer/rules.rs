//! Deterministic rule-based extraction backend.
//!
//! Each sub-feature has a table of regex patterns with technique notes.
//! Textual artifact content is scanned line by line; matches become
//! evidence entries, and the match count maps to a confidence rating.
//! The backend emits responses in the same wire schema as a live model, so
//! the strict parser is exercised on every path.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::json;

use crate::analyzer::backend::{Backend, TaskContext};
use crate::analyzer::SubFeature;
use crate::corpus::{ExploitArtifact, FileKind};
use crate::error::Result;

struct Pattern {
    re: Regex,
    technique: &'static str,
}

fn table(defs: &[(&str, &'static str)]) -> Vec<Pattern> {
    defs.iter()
        .map(|(pat, technique)| Pattern {
            re: Regex::new(&format!("(?i){pat}")).expect("static pattern compiles"),
            technique,
        })
        .collect()
}

struct PatternTables {
    is_remote: Vec<Pattern>,
    info_dependency: Vec<Pattern>,
    attack_condition: Vec<Pattern>,
    probability_dep: Vec<Pattern>,
    user_interaction: Vec<Pattern>,
    privilege_admin: Vec<Pattern>,
    privilege_user: Vec<Pattern>,
    evasion: Vec<Pattern>,
    code_exec: Vec<Pattern>,
    priv_escalation: Vec<Pattern>,
    info_leak: Vec<Pattern>,
    bypass: Vec<Pattern>,
    dos: Vec<Pattern>,
    relevance: Vec<Pattern>,
    flexibility: Vec<Pattern>,
    functionality: Vec<Pattern>,
}

fn tables() -> &'static PatternTables {
    static TABLES: OnceLock<PatternTables> = OnceLock::new();
    TABLES.get_or_init(|| PatternTables {
        is_remote: table(&[
            (r"https?://", "Network URL target (Technique ID 1)"),
            (r"requests\.(get|post|put|delete)", "HTTP client call (Technique ID 2)"),
            (r"socket\.connect|net\.Dial|new Socket", "Raw socket connection (Technique ID 3)"),
            (r"remote (code execution|attacker|exploit)", "Remote exploitation statement (Technique ID 4)"),
            (r"\bcurl\b|\bwget\b", "Command-line HTTP tooling (Technique ID 5)"),
            (r"--target[ =]|target_url|RHOST", "Remote target parameter (Technique ID 6)"),
        ]),
        info_dependency: table(&[
            (
                r#"(password|passwd|pwd)\s*[:=]\s*["'][^"']+["']"#,
                "Hardcoded credentials (Technique ID 1)",
            ),
            (
                r#"(api[_-]?key|token|secret)\s*[:=]\s*["'][^"']+["']"#,
                "Hardcoded API secret (Technique ID 2)",
            ),
            (r"valid (credentials|session|cookie)", "Requires captured credentials (Technique ID 3)"),
            (r"session[_-]?id|csrf[_-]?token", "Session identifier dependency (Technique ID 4)"),
            (r"internal (ip|address|hostname)", "Target address knowledge (Technique ID 5)"),
            (r"version (fingerprint|check required)|exact version", "Version fingerprint dependency (Technique ID 6)"),
        ]),
        attack_condition: table(&[
            (r"race condition", "Race condition requirement (Technique ID 1)"),
            (r"only works (if|when|on)", "Conditional exploitation note (Technique ID 2)"),
            (r"must be (enabled|configured|running|installed)", "Target configuration requirement (Technique ID 3)"),
            (r"non-?default (setting|configuration|option)", "Non-default configuration (Technique ID 4)"),
            (r"timing window|narrow window", "Timing window requirement (Technique ID 5)"),
            (r"debug mode|developer mode", "Special mode requirement (Technique ID 6)"),
        ]),
        probability_dep: table(&[
            (r"brute[- ]?force", "Brute-force loop (Technique ID 1)"),
            (r"heap spray", "Heap spraying (Technique ID 2)"),
            (r"retry (until|loop)|keep trying", "Retry-until-success loop (Technique ID 3)"),
            (r"success rate|may fail|not always succeed", "Probabilistic success note (Technique ID 4)"),
            (r"random\.(randint|choice)|os\.urandom", "Randomized attempt generation (Technique ID 5)"),
            (r"\bASLR\b", "Address randomization defeat (Technique ID 6)"),
        ]),
        user_interaction: table(&[
            (r"victim (must|needs|opens|clicks)", "Victim action requirement (Technique ID 1)"),
            (r"phishing|social engineering|lure", "Social-engineering delivery (Technique ID 2)"),
            (r"click(s|ing)? (on|the|a) ", "Click requirement (Technique ID 3)"),
            (r"open (the |a )?(attachment|document|file sent)", "Malicious document delivery (Technique ID 4)"),
            (r"user interaction", "Explicit user-interaction note (Technique ID 5)"),
        ]),
        privilege_admin: table(&[
            (r"\bsudo\b|as root|requires? root", "Root privilege invocation (Technique ID 1)"),
            (r"administrator (rights|privileges|account)", "Administrator requirement (Technique ID 2)"),
            (r"SYSTEM privileges|domain admin", "High-privilege account requirement (Technique ID 3)"),
        ]),
        privilege_user: table(&[
            (r"authenticated (user|access|attacker)", "Authenticated access requirement (Technique ID 4)"),
            (r"valid (account|login|user)", "Valid account requirement (Technique ID 5)"),
            (r"low[- ]privileged? (user|account|shell)", "Low-privilege account requirement (Technique ID 6)"),
            (r"log(ged|in) in", "Login requirement (Technique ID 7)"),
        ]),
        evasion: table(&[
            (r"obfuscat", "Payload obfuscation (Technique ID 1)"),
            (r"bypass(es|ing)? (av|antivirus|edr|amsi|defender)", "Security product evasion (Technique ID 2)"),
            (r"sandbox (detect|evas)", "Sandbox detection (Technique ID 3)"),
            (r"base64[- ]?(encode|decode)d? payload", "Encoded payload staging (Technique ID 4)"),
            (r"disable (defender|logging|auditing)", "Defense disabling (Technique ID 5)"),
        ]),
        code_exec: table(&[
            (r"remote code execution|\brce\b", "Remote code execution claim (Technique ID 1)"),
            (r"os\.system|subprocess\.(run|call|Popen)|popen", "Command execution primitive (Technique ID 2)"),
            (r"exec\(|eval\(|system\(", "Code evaluation primitive (Technique ID 3)"),
            (r"reverse shell|bind shell|shellcode", "Shell payload (Technique ID 4)"),
            (r"command injection|arbitrary command", "Command injection (Technique ID 5)"),
            (r"deserializ.*(gadget|exploit)|gadget chain", "Deserialization gadget execution (Technique ID 6)"),
        ]),
        priv_escalation: table(&[
            (r"privilege escalation|escalate[sd]? privileges?", "Privilege escalation claim (Technique ID 1)"),
            (r"setuid|setcap|suid binary", "Setuid abuse (Technique ID 2)"),
            (r"become (root|admin(istrator)?)|to root", "Privilege elevation outcome (Technique ID 3)"),
            (r"token (theft|impersonation)", "Token impersonation (Technique ID 4)"),
        ]),
        info_leak: table(&[
            (r"information disclosure|info(rmation)? leak", "Information disclosure claim (Technique ID 1)"),
            (r"read arbitrary files?|file (read|disclosure)", "Arbitrary file read (Technique ID 2)"),
            (r"director(y|ies) traversal|path traversal|\.\./\.\./", "Path traversal (Technique ID 3)"),
            (r"dump(s|ing)? (memory|credentials|hashes|database)", "Data dumping (Technique ID 4)"),
            (r"exfiltrat", "Data exfiltration (Technique ID 5)"),
            (r"leak(s|ed|ing)? (the )?(memory|address|secret|key|contents)", "Memory or secret leak (Technique ID 6)"),
        ]),
        bypass: table(&[
            (r"auth(entication|orization)? bypass", "Authentication bypass (Technique ID 1)"),
            (r"bypass(es|ing)? (the )?(auth|login|check|validation|verification|filter|restriction|signature)", "Security check bypass (Technique ID 2)"),
            (r"without (authentication|authorization|a valid)", "Unauthenticated access (Technique ID 3)"),
            (r"signature (forgery|bypass)|forge[sd]? (a )?signature", "Signature forgery (Technique ID 4)"),
        ]),
        dos: table(&[
            (r"denial of service|\bdos attack\b|\(dos\)", "Denial-of-service claim (Technique ID 1)"),
            (r"crash(es|ed|ing)? (the )?(server|service|process|application|kernel)", "Service crash (Technique ID 2)"),
            (r"segfault|segmentation fault|panic", "Fault-inducing input (Technique ID 3)"),
            (r"infinite loop|resource exhaustion|memory exhaustion", "Resource exhaustion (Technique ID 4)"),
        ]),
        relevance: table(&[
            (r"CVE-\d{4}-\d{4,}", "Vulnerability identifier reference (Technique ID 1)"),
            (r"proof[- ]of[- ]concept|\bpoc\b", "Proof-of-concept statement (Technique ID 2)"),
            (r"exploit", "Exploit statement (Technique ID 3)"),
            (r"vulnerab", "Vulnerability discussion (Technique ID 4)"),
        ]),
        flexibility: table(&[
            (r"argparse|sys\.argv|getopt|clap::|flag\.Parse", "Command-line argument parsing (Technique ID 1)"),
            (r"--target|--host|--port|--url", "Target parameterization (Technique ID 2)"),
            (r"config(uration)? file|\.env file|environment variables?", "Configuration-driven targeting (Technique ID 3)"),
            (r"customiz|adaptab|parameteriz", "Customization statement (Technique ID 4)"),
        ]),
        functionality: table(&[
            (r"successfully (exploited|executed|obtained|extracted|escalated)", "Successful exploitation claim (Technique ID 1)"),
            (r"tested (on|against|with)", "Tested-against statement (Technique ID 2)"),
            (r"working exploit|fully functional|full exploit chain", "Working exploit claim (Technique ID 3)"),
            (r"shell obtained|session opened|root shell", "Attack goal achieved (Technique ID 4)"),
            (r"verified (on|against|working)", "Verified behavior statement (Technique ID 5)"),
        ]),
    })
}

/// Map a match count to a 1-5 confidence rating. No matches is weak
/// negative evidence (2), piles of matches are near certainty (5).
fn confidence_for(matches: usize) -> u8 {
    match matches {
        0 => 2,
        1 => 3,
        2 => 4,
        _ => 5,
    }
}

struct Scan {
    evidence: Vec<(String, u64, &'static str)>,
    total_matches: usize,
}

const MAX_EVIDENCE: usize = 5;

fn scan(artifact: &ExploitArtifact, patterns: &[Pattern]) -> Scan {
    let mut evidence = Vec::new();
    let mut total = 0;
    for (label, text) in artifact.textual_units() {
        for (line_no, line) in text.lines().enumerate() {
            for p in patterns {
                if p.re.is_match(line) {
                    total += 1;
                    if evidence.len() < MAX_EVIDENCE {
                        evidence.push((label.to_string(), (line_no + 1) as u64, p.technique));
                    }
                }
            }
        }
    }
    Scan { evidence, total_matches: total }
}

fn response(evidence: &[(String, u64, &'static str)], conclusion: serde_json::Value, confidence: u8) -> String {
    json!({
        "file_analysis": evidence
            .iter()
            .map(|(file, line, technique)| json!({
                "file": file,
                "line": line,
                "technique": technique,
            }))
            .collect::<Vec<_>>(),
        "conclusion": conclusion,
        "confidence": confidence,
    })
    .to_string()
}

/// Offline reference backend. Every response is a pure function of the
/// artifact content, so repeated runs are byte-identical.
#[derive(Debug, Default, Clone, Copy)]
pub struct RulesBackend;

impl RulesBackend {
    pub fn new() -> Self {
        RulesBackend
    }

    fn availability_scan(artifact: &ExploitArtifact) -> Scan {
        // Structural rule: exploit source is "available" when the artifact
        // ships at least one non-empty source file.
        let mut evidence = Vec::new();
        let mut total = 0;
        for file in &artifact.files {
            if file.kind == FileKind::Source
                && file.content.as_deref().is_some_and(|c| !c.trim().is_empty())
            {
                total += 1;
                if evidence.len() < MAX_EVIDENCE {
                    evidence.push((
                        file.path.clone(),
                        1,
                        "Exploit source file present (Technique ID 1)",
                    ));
                }
            }
        }
        Scan { evidence, total_matches: total }
    }
}

impl Backend for RulesBackend {
    fn name(&self) -> &'static str {
        "rules"
    }

    fn analyze(&self, task: SubFeature, ctx: &TaskContext<'_>) -> Result<String> {
        let t = tables();
        let artifact = ctx.artifact;

        if task == SubFeature::PrivilegeRequired {
            let admin = scan(artifact, &t.privilege_admin);
            let user = scan(artifact, &t.privilege_user);
            let (level, scan_used) = if admin.total_matches > 0 {
                ("admin", admin)
            } else if user.total_matches > 0 {
                ("user", user)
            } else {
                ("none", Scan { evidence: vec![], total_matches: 0 })
            };
            let confidence = confidence_for(scan_used.total_matches);
            return Ok(response(&scan_used.evidence, json!(level), confidence));
        }

        let result = match task {
            SubFeature::IsRemote => scan(artifact, &t.is_remote),
            SubFeature::InfoDependency => scan(artifact, &t.info_dependency),
            SubFeature::AttackCondition => scan(artifact, &t.attack_condition),
            SubFeature::ProbabilityDep => scan(artifact, &t.probability_dep),
            SubFeature::UserInteraction => scan(artifact, &t.user_interaction),
            SubFeature::Evasion => scan(artifact, &t.evasion),
            SubFeature::CodeExec => scan(artifact, &t.code_exec),
            SubFeature::PrivEscalation => scan(artifact, &t.priv_escalation),
            SubFeature::InfoLeak => scan(artifact, &t.info_leak),
            SubFeature::Bypass => scan(artifact, &t.bypass),
            SubFeature::Dos => scan(artifact, &t.dos),
            SubFeature::Relevance => scan(artifact, &t.relevance),
            SubFeature::Availability => Self::availability_scan(artifact),
            SubFeature::Flexibility => scan(artifact, &t.flexibility),
            SubFeature::Functionality => {
                // Claims of working exploitation only count when exploit
                // source is actually present.
                let claims = scan(artifact, &t.functionality);
                if Self::availability_scan(artifact).total_matches > 0 {
                    claims
                } else {
                    Scan { evidence: vec![], total_matches: 0 }
                }
            }
            SubFeature::PrivilegeRequired => unreachable!("handled above"),
        };

        let conclusion = json!(result.total_matches > 0);
        let confidence = confidence_for(result.total_matches);
        Ok(response(&result.evidence, conclusion, confidence))
    }
}
