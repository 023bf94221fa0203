//! Feature aggregation and actionability scoring.
//!
//! Sub-feature findings collapse into five high-level features (attack
//! vector, attack complexity, impact, exploit maturity, popularity), each
//! with a numeric encoding in [0,1]. An exploit's actionability is the
//! clamped convex combination of those encodings; a vulnerability's
//! severity is the maximum actionability over its exploits.

use serde::{Deserialize, Serialize};

use crate::analyzer::{FeatureVector, PopularityInputs, PrivilegeLevel, SubFeatureFinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackVector {
    Remote,
    NotRemote,
}

/// Attack complexity as seen by the attacker: `Low` means few prerequisites
/// stand in the way (score above the threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityLevel {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactClass {
    CodeExec,
    PrivEsc,
    InfoLeak,
    Bypass,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaturityLevel {
    None,
    PoC,
    Exploit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityLevel {
    Low,
    High,
}

/// All tunable weights and thresholds for aggregation and scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    /// Complexity sub-feature weights, in the fixed sub-feature order
    /// (info_dependency, attack_condition, probability_dep,
    /// user_interaction, privilege_required, evasion). Sum to 1.
    pub complexity_w: [f64; 6],
    /// Popularity term weights for (n_exploits, stars, forks).
    pub popularity_w: [f64; 3],
    /// Feature weights for (attack vector, complexity, impact, maturity,
    /// popularity). Sum to 1.
    pub feature_alpha: [f64; 5],
    /// Complexity is `Low` (attacker-favorable) when the score exceeds this.
    pub complexity_threshold: f64,
    /// Popularity is `High` when the score exceeds this.
    pub popularity_threshold: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            complexity_w: [1.0 / 6.0; 6],
            popularity_w: [0.5, 0.003, 0.006],
            feature_alpha: [0.15, 0.20, 0.25, 0.30, 0.10],
            complexity_threshold: 0.5,
            popularity_threshold: 5.0,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), String> {
        let check_sum = |name: &str, values: &[f64]| -> Result<(), String> {
            if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(format!("{name} must be nonnegative and finite"));
            }
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("{name} sum to {sum}, expected 1"));
            }
            Ok(())
        };
        check_sum("complexity_w", &self.complexity_w)?;
        check_sum("feature_alpha", &self.feature_alpha)?;
        if self.popularity_w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err("popularity_w must be nonnegative and finite".into());
        }
        Ok(())
    }
}

/// Aggregated feature values for one exploit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedFeatures {
    pub attack_vector: AttackVector,
    pub complexity_level: ComplexityLevel,
    pub complexity_score: f64,
    pub primary_impact: ImpactClass,
    pub dos: bool,
    pub maturity: MaturityLevel,
    pub popularity_level: PopularityLevel,
    pub popularity_score: f64,
}

/// Attacker-favorability ordinal of each complexity sub-feature, in the
/// fixed order. A prerequisite that is present scores 0 (it hinders the
/// attacker); an absent one scores 1. Privilege grades none→1, user→0.5,
/// admin→0.
pub fn favorability(fv: &FeatureVector) -> [f64; 6] {
    let flag = |present: bool| if present { 0.0 } else { 1.0 };
    [
        flag(fv.info_dependency.conclusion.as_flag()),
        flag(fv.attack_condition.conclusion.as_flag()),
        flag(fv.probability_dep.conclusion.as_flag()),
        flag(fv.user_interaction.conclusion.as_flag()),
        match fv.privilege() {
            PrivilegeLevel::None => 1.0,
            PrivilegeLevel::User => 0.5,
            PrivilegeLevel::Admin => 0.0,
        },
        flag(fv.evasion.conclusion.as_flag()),
    ]
}

/// Weighted complexity score: the dot product of the favorability ordinals
/// with the complexity weights.
pub fn complexity_score(fv: &FeatureVector, w: &Weights) -> f64 {
    favorability(fv)
        .iter()
        .zip(&w.complexity_w)
        .map(|(f, wi)| f * wi)
        .sum()
}

/// Highest-severity true impact sub-feature, in the fixed hierarchy.
pub fn primary_impact(
    code_exec: bool,
    priv_escalation: bool,
    info_leak: bool,
    bypass: bool,
) -> ImpactClass {
    if code_exec {
        ImpactClass::CodeExec
    } else if priv_escalation {
        ImpactClass::PrivEsc
    } else if info_leak {
        ImpactClass::InfoLeak
    } else if bypass {
        ImpactClass::Bypass
    } else {
        ImpactClass::None
    }
}

/// Maturity truth table over (relevance, availability, flexibility,
/// functionality): irrelevant artifacts are `None`; relevant ones with
/// available or adaptable code that achieves its goal are `Exploit`;
/// everything else is `PoC`.
pub fn maturity_level(
    relevance: bool,
    availability: bool,
    flexibility: bool,
    functionality: bool,
) -> MaturityLevel {
    if !relevance {
        MaturityLevel::None
    } else if (availability || flexibility) && functionality {
        MaturityLevel::Exploit
    } else {
        MaturityLevel::PoC
    }
}

/// Popularity score: `w1·n_exploits + w2·stars + w3·forks`.
pub fn popularity_score(pop: &PopularityInputs, w: &Weights) -> f64 {
    let [w1, w2, w3] = w.popularity_w;
    w1 * pop.n_exploits as f64 + w2 * pop.stars as f64 + w3 * pop.forks as f64
}

/// Collapse a feature vector and popularity counts into the five aggregated
/// features.
pub fn aggregate(fv: &FeatureVector, pop: &PopularityInputs, w: &Weights) -> AggregatedFeatures {
    let c_score = complexity_score(fv, w);
    let p_score = popularity_score(pop, w);
    AggregatedFeatures {
        attack_vector: if fv.is_remote.conclusion.as_flag() {
            AttackVector::Remote
        } else {
            AttackVector::NotRemote
        },
        complexity_level: if c_score > w.complexity_threshold {
            ComplexityLevel::Low
        } else {
            ComplexityLevel::High
        },
        complexity_score: c_score,
        primary_impact: primary_impact(
            fv.code_exec.conclusion.as_flag(),
            fv.priv_escalation.conclusion.as_flag(),
            fv.info_leak.conclusion.as_flag(),
            fv.bypass.conclusion.as_flag(),
        ),
        dos: fv.dos.conclusion.as_flag(),
        maturity: maturity_level(
            fv.relevance.conclusion.as_flag(),
            fv.availability.conclusion.as_flag(),
            fv.flexibility.conclusion.as_flag(),
            fv.functionality.conclusion.as_flag(),
        ),
        popularity_level: if p_score > w.popularity_threshold {
            PopularityLevel::High
        } else {
            PopularityLevel::Low
        },
        popularity_score: p_score,
    }
}

pub fn av_encoding(av: AttackVector) -> f64 {
    match av {
        AttackVector::Remote => 1.0,
        AttackVector::NotRemote => 0.2,
    }
}

pub fn ac_encoding(level: ComplexityLevel) -> f64 {
    match level {
        ComplexityLevel::Low => 1.0,
        ComplexityLevel::High => 0.3,
    }
}

/// Impact encoding; a denial-of-service capability floors the value at 0.3
/// without ever lowering a stronger impact.
pub fn impact_encoding(impact: ImpactClass, dos: bool) -> f64 {
    let base: f64 = match impact {
        ImpactClass::CodeExec => 1.0,
        ImpactClass::PrivEsc => 0.8,
        ImpactClass::InfoLeak => 0.6,
        ImpactClass::Bypass => 0.4,
        ImpactClass::None => 0.0,
    };
    if dos {
        base.max(0.3)
    } else {
        base
    }
}

pub fn em_encoding(maturity: MaturityLevel) -> f64 {
    match maturity {
        MaturityLevel::None => 0.0,
        MaturityLevel::PoC => 0.4,
        MaturityLevel::Exploit => 1.0,
    }
}

pub fn p_encoding(level: PopularityLevel) -> f64 {
    match level {
        PopularityLevel::Low => 0.5,
        PopularityLevel::High => 1.0,
    }
}

/// Numeric encodings of the five aggregated features, in α order.
pub fn feature_encodings(agg: &AggregatedFeatures) -> [f64; 5] {
    [
        av_encoding(agg.attack_vector),
        ac_encoding(agg.complexity_level),
        impact_encoding(agg.primary_impact, agg.dos),
        em_encoding(agg.maturity),
        p_encoding(agg.popularity_level),
    ]
}

/// Actionability: clamped weighted sum of the feature encodings.
pub fn actionability(agg: &AggregatedFeatures, w: &Weights) -> f64 {
    let total: f64 = feature_encodings(agg)
        .iter()
        .zip(&w.feature_alpha)
        .map(|(enc, alpha)| enc * alpha)
        .sum();
    total.clamp(0.0, 1.0)
}

/// Vulnerability severity: the maximum actionability over the CVE's
/// exploits; no usable exploit means 0.0.
pub fn vulnerability_severity(scores: &[f64]) -> f64 {
    scores.iter().copied().fold(0.0, f64::max)
}

/// Human-readable justification for one aggregated feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureJustification {
    pub feature: String,
    pub value: String,
    pub justification: String,
}

/// Fully scored exploit: aggregated features, actionability, and the
/// evidence trail behind each feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitScore {
    pub aggregated: AggregatedFeatures,
    pub actionability: f64,
    pub justifications: Vec<FeatureJustification>,
}

const NO_EVIDENCE: &str = "no supporting evidence; conservative default";

fn cite(findings: &[&SubFeatureFinding]) -> String {
    let lines: Vec<String> = findings
        .iter()
        .flat_map(|f| {
            f.evidence
                .iter()
                .map(|e| format!("{}:{} - {}", e.file, e.line, e.technique))
        })
        .collect();
    if lines.is_empty() {
        NO_EVIDENCE.to_string()
    } else {
        lines.join("; ")
    }
}

/// Score one exploit and assemble per-feature justifications from the
/// underlying finding evidence.
pub fn score_exploit(fv: &FeatureVector, pop: &PopularityInputs, w: &Weights) -> ExploitScore {
    let agg = aggregate(fv, pop, w);
    let act = actionability(&agg, w);

    let impact_findings: Vec<&SubFeatureFinding> = {
        let mut v: Vec<&SubFeatureFinding> = Vec::new();
        match agg.primary_impact {
            ImpactClass::CodeExec => v.push(&fv.code_exec),
            ImpactClass::PrivEsc => v.push(&fv.priv_escalation),
            ImpactClass::InfoLeak => v.push(&fv.info_leak),
            ImpactClass::Bypass => v.push(&fv.bypass),
            ImpactClass::None => {}
        }
        if agg.dos {
            v.push(&fv.dos);
        }
        v
    };

    let justifications = vec![
        FeatureJustification {
            feature: "attack_vector".to_string(),
            value: format!("{:?}", agg.attack_vector),
            justification: cite(&[&fv.is_remote]),
        },
        FeatureJustification {
            feature: "attack_complexity".to_string(),
            value: format!("{:?} ({:.4})", agg.complexity_level, agg.complexity_score),
            justification: cite(&[
                &fv.info_dependency,
                &fv.attack_condition,
                &fv.probability_dep,
                &fv.user_interaction,
                &fv.privilege_required,
                &fv.evasion,
            ]),
        },
        FeatureJustification {
            feature: "impact".to_string(),
            value: if agg.dos {
                format!("{:?} (+DoS)", agg.primary_impact)
            } else {
                format!("{:?}", agg.primary_impact)
            },
            justification: cite(&impact_findings),
        },
        FeatureJustification {
            feature: "exploit_maturity".to_string(),
            value: format!("{:?}", agg.maturity),
            justification: cite(&[
                &fv.relevance,
                &fv.availability,
                &fv.flexibility,
                &fv.functionality,
            ]),
        },
        FeatureJustification {
            feature: "popularity".to_string(),
            value: format!("{:?} ({:.4})", agg.popularity_level, agg.popularity_score),
            justification: format!(
                "n_exploits={}, stars={}, forks={}",
                pop.n_exploits, pop.stars, pop.forks
            ),
        },
    ];

    ExploitScore { aggregated: agg, actionability: act, justifications }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::{Conclusion, Evidence, SubFeature};

    fn set_flag(fv: &mut FeatureVector, sf: SubFeature, value: bool) {
        let finding = SubFeatureFinding {
            subfeature: sf,
            evidence: vec![],
            conclusion: Conclusion::Flag(value),
            confidence: 3,
        };
        match sf {
            SubFeature::IsRemote => fv.is_remote = finding,
            SubFeature::InfoDependency => fv.info_dependency = finding,
            SubFeature::AttackCondition => fv.attack_condition = finding,
            SubFeature::ProbabilityDep => fv.probability_dep = finding,
            SubFeature::UserInteraction => fv.user_interaction = finding,
            SubFeature::Evasion => fv.evasion = finding,
            SubFeature::CodeExec => fv.code_exec = finding,
            SubFeature::PrivEscalation => fv.priv_escalation = finding,
            SubFeature::InfoLeak => fv.info_leak = finding,
            SubFeature::Bypass => fv.bypass = finding,
            SubFeature::Dos => fv.dos = finding,
            SubFeature::Relevance => fv.relevance = finding,
            SubFeature::Availability => fv.availability = finding,
            SubFeature::Flexibility => fv.flexibility = finding,
            SubFeature::Functionality => fv.functionality = finding,
            SubFeature::PrivilegeRequired => panic!("use set_privilege"),
        }
    }

    fn set_privilege(fv: &mut FeatureVector, level: PrivilegeLevel) {
        fv.privilege_required = SubFeatureFinding {
            subfeature: SubFeature::PrivilegeRequired,
            evidence: vec![],
            conclusion: Conclusion::Privilege(level),
            confidence: 3,
        };
    }

    fn pop(n: u64, stars: u64, forks: u64) -> PopularityInputs {
        PopularityInputs { n_exploits: n, stars, forks }
    }

    #[test]
    fn complexity_all_absent_none_privilege_is_one() {
        let mut fv = FeatureVector::conservative();
        set_privilege(&mut fv, PrivilegeLevel::None);
        // Conservative flags are false = prerequisites absent.
        let score = complexity_score(&fv, &Weights::default());
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complexity_all_present_admin_is_zero() {
        let mut fv = FeatureVector::conservative();
        for sf in [
            SubFeature::InfoDependency,
            SubFeature::AttackCondition,
            SubFeature::ProbabilityDep,
            SubFeature::UserInteraction,
            SubFeature::Evasion,
        ] {
            set_flag(&mut fv, sf, true);
        }
        set_privilege(&mut fv, PrivilegeLevel::Admin);
        assert_eq!(complexity_score(&fv, &Weights::default()), 0.0);
    }

    #[test]
    fn complexity_uniform_hand_value() {
        // f = (1, 0, 1, 0, 0.5, 1) under uniform 1/6 weights -> 3.5/6.
        let mut fv = FeatureVector::conservative();
        set_flag(&mut fv, SubFeature::InfoDependency, false);
        set_flag(&mut fv, SubFeature::AttackCondition, true);
        set_flag(&mut fv, SubFeature::ProbabilityDep, false);
        set_flag(&mut fv, SubFeature::UserInteraction, true);
        set_privilege(&mut fv, PrivilegeLevel::User);
        set_flag(&mut fv, SubFeature::Evasion, false);
        let score = complexity_score(&fv, &Weights::default());
        assert!((score - 0.583_333_333_3).abs() < 1e-9, "score = {score}");
    }

    #[test]
    fn maturity_examples() {
        assert_eq!(maturity_level(false, true, true, true), MaturityLevel::None);
        assert_eq!(maturity_level(true, true, false, false), MaturityLevel::PoC);
        assert_eq!(maturity_level(true, true, false, true), MaturityLevel::Exploit);
        assert_eq!(maturity_level(true, false, true, true), MaturityLevel::Exploit);
        assert_eq!(maturity_level(true, false, false, true), MaturityLevel::PoC);
    }

    #[test]
    fn maturity_truth_table_is_total_and_relevance_gated() {
        let mut none_count = 0;
        let mut exploit_count = 0;
        for bits in 0..16u8 {
            let r = bits & 1 != 0;
            let a = bits & 2 != 0;
            let f = bits & 4 != 0;
            let fun = bits & 8 != 0;
            let level = maturity_level(r, a, f, fun);
            if !r {
                assert_eq!(level, MaturityLevel::None);
                none_count += 1;
            }
            if level == MaturityLevel::Exploit {
                exploit_count += 1;
                assert!(r && (a || f) && fun);
            }
        }
        assert_eq!(none_count, 8);
        assert_eq!(exploit_count, 3);
    }

    #[test]
    fn impact_hierarchy_examples() {
        assert_eq!(primary_impact(false, true, true, true), ImpactClass::PrivEsc);
        assert_eq!(primary_impact(true, false, false, false), ImpactClass::CodeExec);
        assert_eq!(primary_impact(false, false, false, false), ImpactClass::None);
    }

    #[test]
    fn dos_carried_independently_of_hierarchy() {
        let mut fv = FeatureVector::conservative();
        set_flag(&mut fv, SubFeature::PrivEscalation, true);
        set_flag(&mut fv, SubFeature::Dos, true);
        let agg = aggregate(&fv, &pop(0, 0, 0), &Weights::default());
        assert_eq!(agg.primary_impact, ImpactClass::PrivEsc);
        assert!(agg.dos);
    }

    #[test]
    fn dos_floors_impact_encoding_without_lowering_it() {
        assert_eq!(impact_encoding(ImpactClass::None, true), 0.3);
        assert_eq!(impact_encoding(ImpactClass::Bypass, true), 0.4);
        assert_eq!(impact_encoding(ImpactClass::CodeExec, true), 1.0);
        assert_eq!(impact_encoding(ImpactClass::None, false), 0.0);
    }

    #[test]
    fn actionability_all_max_is_one() {
        let agg = AggregatedFeatures {
            attack_vector: AttackVector::Remote,
            complexity_level: ComplexityLevel::Low,
            complexity_score: 1.0,
            primary_impact: ImpactClass::CodeExec,
            dos: false,
            maturity: MaturityLevel::Exploit,
            popularity_level: PopularityLevel::High,
            popularity_score: 10.0,
        };
        assert!((actionability(&agg, &Weights::default()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maturity_none_zeroes_em_only_alpha() {
        let mut w = Weights::default();
        w.feature_alpha = [0.0, 0.0, 0.0, 1.0, 0.0];
        let agg = AggregatedFeatures {
            attack_vector: AttackVector::Remote,
            complexity_level: ComplexityLevel::Low,
            complexity_score: 1.0,
            primary_impact: ImpactClass::CodeExec,
            dos: false,
            maturity: MaturityLevel::None,
            popularity_level: PopularityLevel::High,
            popularity_score: 10.0,
        };
        assert_eq!(actionability(&agg, &w), 0.0);
    }

    #[test]
    fn actionability_default_alpha_hand_value() {
        // (Remote, Low, CodeExec without DoS, Exploit, Low popularity):
        // 0.15 + 0.20 + 0.25 + 0.30 + 0.05 = 0.95.
        let agg = AggregatedFeatures {
            attack_vector: AttackVector::Remote,
            complexity_level: ComplexityLevel::Low,
            complexity_score: 0.9,
            primary_impact: ImpactClass::CodeExec,
            dos: false,
            maturity: MaturityLevel::Exploit,
            popularity_level: PopularityLevel::Low,
            popularity_score: 1.0,
        };
        let act = actionability(&agg, &Weights::default());
        assert!((act - 0.95).abs() < 1e-12, "act = {act}");
    }

    #[test]
    fn severity_examples() {
        assert_eq!(vulnerability_severity(&[]), 0.0);
        assert_eq!(vulnerability_severity(&[0.3]), 0.3);
        assert_eq!(vulnerability_severity(&[0.2, 0.95, 0.4]), 0.95);
    }

    #[test]
    fn popularity_thresholding() {
        let w = Weights::default();
        // 10 sibling exploits alone: 0.5 * 10 = 5.0, not strictly above.
        let low = aggregate(&FeatureVector::conservative(), &pop(10, 0, 0), &w);
        assert_eq!(low.popularity_level, PopularityLevel::Low);
        let high = aggregate(&FeatureVector::conservative(), &pop(11, 0, 0), &w);
        assert_eq!(high.popularity_level, PopularityLevel::High);
        // 2000 stars: 0.003 * 2000 = 6 > 5.
        let starry = aggregate(&FeatureVector::conservative(), &pop(0, 2000, 0), &w);
        assert_eq!(starry.popularity_level, PopularityLevel::High);
    }

    #[test]
    fn justifications_cite_evidence_verbatim() {
        let mut fv = FeatureVector::conservative();
        fv.is_remote = SubFeatureFinding {
            subfeature: SubFeature::IsRemote,
            evidence: vec![Evidence {
                file: "exploit.py".into(),
                line: 47,
                technique: "Hardcoded credentials (Technique ID 1)".into(),
            }],
            conclusion: Conclusion::Flag(true),
            confidence: 5,
        };
        let score = score_exploit(&fv, &pop(1, 0, 0), &Weights::default());
        let av = &score.justifications[0];
        assert_eq!(av.feature, "attack_vector");
        assert!(av.justification.contains("exploit.py:47 - Hardcoded credentials (Technique ID 1)"));
    }

    #[test]
    fn empty_evidence_yields_conservative_note() {
        let fv = FeatureVector::conservative();
        let score = score_exploit(&fv, &pop(0, 0, 0), &Weights::default());
        let maturity = score
            .justifications
            .iter()
            .find(|j| j.feature == "exploit_maturity")
            .unwrap();
        assert_eq!(maturity.justification, NO_EVIDENCE);
    }

    #[test]
    fn score_exploit_has_five_justifications_in_order() {
        let score = score_exploit(
            &FeatureVector::conservative(),
            &pop(0, 0, 0),
            &Weights::default(),
        );
        let names: Vec<&str> = score.justifications.iter().map(|j| j.feature.as_str()).collect();
        assert_eq!(
            names,
            ["attack_vector", "attack_complexity", "impact", "exploit_maturity", "popularity"]
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_weights() -> impl Strategy<Value = Weights> {
            (
                prop::array::uniform6(0.01..1.0f64),
                prop::array::uniform5(0.01..1.0f64),
            )
                .prop_map(|(cw, alpha)| {
                    let csum: f64 = cw.iter().sum();
                    let asum: f64 = alpha.iter().sum();
                    let mut w = Weights::default();
                    w.complexity_w = cw.map(|v| v / csum);
                    w.feature_alpha = alpha.map(|v| v / asum);
                    w
                })
        }

        fn arb_vector() -> impl Strategy<Value = FeatureVector> {
            (any::<u16>(), 0..3u8).prop_map(|(bits, priv_level)| {
                let mut fv = FeatureVector::conservative();
                let flags = [
                    SubFeature::IsRemote,
                    SubFeature::InfoDependency,
                    SubFeature::AttackCondition,
                    SubFeature::ProbabilityDep,
                    SubFeature::UserInteraction,
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
                for (i, sf) in flags.iter().enumerate() {
                    set_flag(&mut fv, *sf, bits & (1 << i) != 0);
                }
                set_privilege(
                    &mut fv,
                    match priv_level {
                        0 => PrivilegeLevel::None,
                        1 => PrivilegeLevel::User,
                        _ => PrivilegeLevel::Admin,
                    },
                );
                fv
            })
        }

        proptest! {
            #[test]
            fn complexity_is_exactly_linear(fv in arb_vector(), w in arb_weights()) {
                let f = favorability(&fv);
                let expected: f64 = f.iter().zip(&w.complexity_w).map(|(a, b)| a * b).sum();
                prop_assert_eq!(complexity_score(&fv, &w), expected);
            }

            #[test]
            fn complexity_label_invariant_under_joint_scaling(
                fv in arb_vector(),
                scale in 0.01..10.0f64,
            ) {
                let w = Weights::default();
                let mut scaled = w.clone();
                for v in &mut scaled.complexity_w {
                    *v *= scale;
                }
                scaled.complexity_threshold *= scale;
                let score = complexity_score(&fv, &w);
                // Skip boundary draws where rounding, not the rule, decides.
                prop_assume!((score - w.complexity_threshold).abs() > 1e-9);
                let base = aggregate(&fv, &PopularityInputs { n_exploits: 0, stars: 0, forks: 0 }, &w);
                let after = aggregate(&fv, &PopularityInputs { n_exploits: 0, stars: 0, forks: 0 }, &scaled);
                prop_assert_eq!(base.complexity_level, after.complexity_level);
            }

            #[test]
            fn actionability_in_unit_interval(fv in arb_vector(), w in arb_weights(),
                                              n in 0u64..50, s in 0u64..5000, f in 0u64..2000) {
                let agg = aggregate(&fv, &PopularityInputs { n_exploits: n, stars: s, forks: f }, &w);
                let act = actionability(&agg, &w);
                prop_assert!((0.0..=1.0).contains(&act));
            }

            #[test]
            fn actionability_monotone_in_single_encoding_upgrades(
                fv in arb_vector(), w in arb_weights(),
            ) {
                let p = PopularityInputs { n_exploits: 0, stars: 0, forks: 0 };
                let base_agg = aggregate(&fv, &p, &w);
                let base = actionability(&base_agg, &w);

                // Upgrade each feature to its maximum encoding in turn.
                let mut upgraded = base_agg.clone();
                upgraded.attack_vector = AttackVector::Remote;
                prop_assert!(actionability(&upgraded, &w) >= base - 1e-12);

                let mut upgraded = base_agg.clone();
                upgraded.complexity_level = ComplexityLevel::Low;
                prop_assert!(actionability(&upgraded, &w) >= base - 1e-12);

                let mut upgraded = base_agg.clone();
                upgraded.primary_impact = ImpactClass::CodeExec;
                prop_assert!(actionability(&upgraded, &w) >= base - 1e-12);

                let mut upgraded = base_agg.clone();
                upgraded.maturity = MaturityLevel::Exploit;
                prop_assert!(actionability(&upgraded, &w) >= base - 1e-12);

                let mut upgraded = base_agg.clone();
                upgraded.popularity_level = PopularityLevel::High;
                prop_assert!(actionability(&upgraded, &w) >= base - 1e-12);
            }

            #[test]
            fn severity_monotone_and_permutation_invariant(
                scores in prop::collection::vec(0.0..1.0f64, 0..12),
                extra in 0.0..1.0f64,
            ) {
                let base = vulnerability_severity(&scores);
                let mut appended = scores.clone();
                appended.push(extra);
                prop_assert!(vulnerability_severity(&appended) >= base);

                let mut reversed = scores.clone();
                reversed.reverse();
                prop_assert_eq!(vulnerability_severity(&reversed), base);
            }
        }
    }
}
