//! Strict parsing of structured backend responses into findings.
//!
//! The wire schema is a single JSON object:
//! `{"file_analysis": [{"file", "line", "technique"}], "conclusion", "confidence"}`
//! with no extra fields. `conclusion` is a boolean (or the strings
//! "true"/"false") for flag sub-features, and one of "none"/"user"/"admin"
//! for the privilege sub-feature. Every failure is typed so the caller can
//! decide to re-prompt.

use serde::Deserialize;
use serde_json::Value;

use crate::analyzer::{Conclusion, Evidence, PrivilegeLevel, SubFeature, SubFeatureFinding};
use crate::error::FindingError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvidence {
    file: String,
    line: u64,
    technique: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFinding {
    file_analysis: Vec<RawEvidence>,
    conclusion: Value,
    confidence: i64,
}

fn coerce_flag(value: &Value) -> Result<bool, FindingError> {
    match value {
        Value::Bool(b) => Ok(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(FindingError::Schema(format!(
                "conclusion `{other}` is not a boolean"
            ))),
        },
        other => Err(FindingError::Schema(format!(
            "conclusion {other} is not a boolean"
        ))),
    }
}

fn coerce_privilege(value: &Value) -> Result<PrivilegeLevel, FindingError> {
    match value {
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PrivilegeLevel::None),
            "user" => Ok(PrivilegeLevel::User),
            "admin" => Ok(PrivilegeLevel::Admin),
            other => Err(FindingError::Schema(format!(
                "conclusion `{other}` is not one of none/user/admin"
            ))),
        },
        other => Err(FindingError::Schema(format!(
            "conclusion {other} is not a privilege level string"
        ))),
    }
}

/// Parse one raw backend response into a finding for `subfeature`.
pub fn parse_finding(raw: &str, subfeature: SubFeature) -> Result<SubFeatureFinding, FindingError> {
    let parsed: RawFinding = serde_json::from_str(raw).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => {
                FindingError::Parse(e.to_string())
            }
            Category::Data => FindingError::Schema(e.to_string()),
        }
    })?;

    if !(1..=5).contains(&parsed.confidence) {
        return Err(FindingError::Range(parsed.confidence));
    }

    let conclusion = if subfeature == SubFeature::PrivilegeRequired {
        Conclusion::Privilege(coerce_privilege(&parsed.conclusion)?)
    } else {
        Conclusion::Flag(coerce_flag(&parsed.conclusion)?)
    };

    Ok(SubFeatureFinding {
        subfeature,
        evidence: parsed
            .file_analysis
            .into_iter()
            .map(|e| Evidence {
                file: e.file,
                line: e.line,
                technique: e.technique,
            })
            .collect(),
        conclusion,
        confidence: parsed.confidence as u8,
    })
}

/// Render a finding back into the wire schema. `parse_finding` of the result
/// returns an equal finding.
pub fn finding_to_response(finding: &SubFeatureFinding) -> String {
    let conclusion = match &finding.conclusion {
        Conclusion::Flag(b) => Value::Bool(*b),
        Conclusion::Privilege(p) => Value::String(
            match p {
                PrivilegeLevel::None => "none",
                PrivilegeLevel::User => "user",
                PrivilegeLevel::Admin => "admin",
            }
            .to_string(),
        ),
    };
    serde_json::json!({
        "file_analysis": finding
            .evidence
            .iter()
            .map(|e| serde_json::json!({
                "file": e.file,
                "line": e.line,
                "technique": e.technique,
            }))
            .collect::<Vec<_>>(),
        "conclusion": conclusion,
        "confidence": finding.confidence,
    })
    .to_string()
}
