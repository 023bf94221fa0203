//! Prompt assembly for per-sub-feature extraction tasks.
//!
//! Every rendered prompt carries four sections in a fixed order: a
//! role-play preamble, step-by-step analysis instructions, retrieved
//! context, and the structured-output contract. Rendering is deterministic,
//! so prompts cache cleanly.

use crate::analyzer::SubFeature;
use crate::corpus::ExploitArtifact;

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub role_preamble: String,
    pub cot_steps: Vec<String>,
    pub rag_snippets: Vec<String>,
    pub output_schema: String,
    pub output_example: String,
}

/// One-line question the backend must answer for each sub-feature.
fn task_question(task: SubFeature) -> &'static str {
    match task {
        SubFeature::IsRemote => {
            "Can this exploit be launched remotely over a network, without local access to the target?"
        }
        SubFeature::InfoDependency => {
            "Does the exploit depend on target-specific information that must be obtained in advance, such as credentials, tokens, addresses, or version identifiers?"
        }
        SubFeature::AttackCondition => {
            "Does successful exploitation require special target conditions, such as a particular configuration, feature flag, or timing window?"
        }
        SubFeature::ProbabilityDep => {
            "Is the success of the exploit probabilistic, requiring repeated attempts, brute force, or races?"
        }
        SubFeature::UserInteraction => {
            "Does exploitation require actions by a victim user, such as opening a file or clicking a link?"
        }
        SubFeature::PrivilegeRequired => {
            "What privilege level must the attacker already hold on the target: none, user, or admin?"
        }
        SubFeature::Evasion => {
            "Does the exploit include techniques to evade defenses such as antivirus, EDR, or sandbox detection?"
        }
        SubFeature::CodeExec => {
            "Does the exploit achieve execution of attacker-controlled code or commands on the target?"
        }
        SubFeature::PrivEscalation => {
            "Does the exploit raise the attacker's privilege level on the target?"
        }
        SubFeature::InfoLeak => {
            "Does the exploit disclose confidential information, such as files, memory, or credentials?"
        }
        SubFeature::Bypass => {
            "Does the exploit bypass a security mechanism such as authentication, validation, or a filter?"
        }
        SubFeature::Dos => {
            "Does the exploit deny service, for example by crashing or exhausting the target?"
        }
        SubFeature::Relevance => {
            "Is this artifact actually an exploit or proof of concept for the vulnerability in question, rather than unrelated code?"
        }
        SubFeature::Availability => {
            "Is working exploit source code available in the artifact, as opposed to a description alone?"
        }
        SubFeature::Flexibility => {
            "Can the exploit be adapted to different targets through arguments, configuration, or parameterized payloads?"
        }
        SubFeature::Functionality => {
            "Does the exploit achieve its intended attack goal end to end, beyond merely detecting the vulnerability?"
        }
    }
}

fn conclusion_contract(task: SubFeature) -> &'static str {
    if task == SubFeature::PrivilegeRequired {
        r#""none" | "user" | "admin""#
    } else {
        "true | false"
    }
}

fn output_example(task: SubFeature) -> String {
    if task == SubFeature::PrivilegeRequired {
        concat!(
            r#"{"file_analysis": [{"file": "exploit.py", "line": 12, "technique": "#,
            r#""Runs under sudo (Technique ID 3)"}], "conclusion": "admin", "confidence": 4}"#
        )
        .to_string()
    } else {
        concat!(
            r#"{"file_analysis": [{"file": "exploit.py", "line": 47, "technique": "#,
            r#""Hardcoded credentials (Technique ID 1)"}], "conclusion": true, "confidence": 5}"#
        )
        .to_string()
    }
}

/// Assemble the [`PromptSpec`] for a task over an artifact with retrieved
/// snippets already in hand.
pub fn prompt_spec(task: SubFeature, snippets: &[String]) -> PromptSpec {
    PromptSpec {
        role_preamble: "You're an excellent cybersecurity expert.".to_string(),
        cot_steps: vec![
            "Read the retrieved artifact content carefully, file by file.".to_string(),
            format!("Answer the question: {}", task_question(task)),
            "For every piece of supporting evidence, note the file, the line number, and the technique you observed.".to_string(),
            "Weigh the evidence and settle on a single conclusion.".to_string(),
            "Rate your confidence in the conclusion on a 1-5 scale, where 5 is near certainty.".to_string(),
        ],
        rag_snippets: snippets.to_vec(),
        output_schema: format!(
            r#"{{"file_analysis": [{{"file": "<path>", "line": <number>, "technique": "<short note>"}}], "conclusion": {}, "confidence": <integer 1-5>}}"#,
            conclusion_contract(task)
        ),
        output_example: output_example(task),
    }
}

/// Render the final prompt text: Role-play, then analysis steps, then
/// retrieved context, then the structured-output contract.
pub fn build_prompt(task: SubFeature, artifact: &ExploitArtifact, snippets: &[String]) -> String {
    let spec = prompt_spec(task, snippets);
    let mut out = String::new();

    out.push_str(&spec.role_preamble);
    out.push_str("\n\n");

    out.push_str("## Analysis Steps\n");
    out.push_str(&format!(
        "You should analyze the exploit artifact `{}` from the following aspects, step by step:\n",
        artifact.artifact_id
    ));
    for (i, step) in spec.cot_steps.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, step));
    }
    out.push('\n');

    out.push_str("## Retrieved Context\n");
    let files: Vec<&str> = artifact.files.iter().map(|f| f.path.as_str()).collect();
    out.push_str(&format!("Artifact files: {}\n", if files.is_empty() {
        "(none)".to_string()
    } else {
        files.join(", ")
    }));
    if spec.rag_snippets.is_empty() {
        out.push_str("no additional context\n");
    } else {
        for (i, snippet) in spec.rag_snippets.iter().enumerate() {
            out.push_str(&format!("[{}] {}\n", i + 1, snippet));
        }
    }
    out.push('\n');

    out.push_str("## Output Format\n");
    out.push_str(
        "You should always respond in valid JSON format with exactly these fields and no surrounding text:\n",
    );
    out.push_str(&spec.output_schema);
    out.push('\n');
    out.push_str("Example:\n");
    out.push_str(&spec.output_example);
    out.push('\n');

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArtifactFile, ExploitArtifact, FileKind, RepoMeta};
    use chrono::TimeZone;

    fn artifact() -> ExploitArtifact {
        ExploitArtifact {
            artifact_id: "acme__poc-kit".to_string(),
            repo: RepoMeta {
                repo_id: "acme/poc-kit".to_string(),
                description_len: 40,
                issue_count: 0,
                topic_labels: vec![],
                size_bytes: 2048,
                stars: 3,
                forks: 0,
                created_at: chrono::Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            },
            files: vec![
                ArtifactFile {
                    path: "exploit.py".into(),
                    kind: FileKind::Source,
                    content: Some("print('x')\n".into()),
                },
                ArtifactFile {
                    path: "README.md".into(),
                    kind: FileKind::Readme,
                    content: Some("usage\n".into()),
                },
            ],
            docs: vec![],
        }
    }

    #[test]
    fn sections_appear_in_order() {
        let prompt = build_prompt(
            SubFeature::IsRemote,
            &artifact(),
            &["snippet one".to_string()],
        );
        let role = prompt.find("You're an excellent cybersecurity expert.").unwrap();
        let cot = prompt.find("## Analysis Steps").unwrap();
        let rag = prompt.find("## Retrieved Context").unwrap();
        let schema = prompt.find("## Output Format").unwrap();
        assert!(role < cot && cot < rag && rag < schema);
    }

    #[test]
    fn schema_names_required_fields() {
        for task in SubFeature::ALL {
            let prompt = build_prompt(task, &artifact(), &[]);
            assert!(prompt.contains("conclusion"), "{task:?} missing conclusion");
            assert!(prompt.contains("confidence"), "{task:?} missing confidence");
            assert!(prompt.contains("file_analysis"), "{task:?} missing file_analysis");
        }
    }

    #[test]
    fn empty_snippets_state_no_additional_context() {
        let prompt = build_prompt(SubFeature::CodeExec, &artifact(), &[]);
        assert!(prompt.contains("no additional context"));
    }

    #[test]
    fn privilege_prompt_uses_ordinal_contract() {
        let prompt = build_prompt(SubFeature::PrivilegeRequired, &artifact(), &[]);
        assert!(prompt.contains(r#""none" | "user" | "admin""#));
    }

    #[test]
    fn golden_info_dependency_prompt() {
        let prompt = build_prompt(
            SubFeature::InfoDependency,
            &artifact(),
            &["password = \"hunter2\" found near line 47".to_string()],
        );
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/src/analyzer/golden/info_dependency_prompt.txt"
        );
        if std::env::var("REGEN_GOLDENS").is_ok() {
            std::fs::write(path, &prompt).unwrap();
        }
        let golden = std::fs::read_to_string(path).expect("golden file present");
        assert_eq!(prompt, golden, "prompt drifted from the reviewed golden");
    }
}
