//! Ranking-quality metrics and score-agreement statistics.
//!
//! Rankings are compared against manually verified ground-truth labels;
//! numeric score vectors are compared with Bland-Altman limits of
//! agreement, rank/linear correlation, and error magnitudes.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{GroundTruthLabel, MaturityObserved};
use crate::error::{Error, Result};

/// One vulnerability's predicted ranking alongside its verified labels.
///
/// `predicted_order` lists artifact ids by descending actionability and
/// must be a permutation of the labeled artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCase {
    pub cve_id: String,
    pub predicted_order: Vec<String>,
    pub labels: BTreeMap<String, GroundTruthLabel>,
}

impl RankingCase {
    pub fn validate(&self) -> Result<()> {
        if self.predicted_order.len() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "case {}: predicted order has {} entries but {} labels",
                self.cve_id,
                self.predicted_order.len(),
                self.labels.len()
            )));
        }
        for id in &self.predicted_order {
            if !self.labels.contains_key(id) {
                return Err(Error::InvalidArgument(format!(
                    "case {}: predicted artifact {id} has no label",
                    self.cve_id
                )));
            }
        }
        Ok(())
    }

    fn has_functional(&self) -> bool {
        self.labels
            .values()
            .any(|l| l.maturity_observed == MaturityObserved::Functional)
    }
}

/// Agreement statistics between two paired score vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub mean_diff: f64,
    pub sd_diff: f64,
    /// `(mean_diff - 1.96·sd, mean_diff + 1.96·sd)`.
    pub limits: (f64, f64),
    pub n_outside: usize,
    pub pct_outside: f64,
    /// Absent when either vector is constant.
    pub pearson: Option<f64>,
    /// Absent when either vector's ranks are constant.
    pub spearman: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
}

/// Bland-Altman limits of agreement for paired measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub limits: (f64, f64),
    pub n_outside: usize,
    pub pct_outside: f64,
    /// Elementwise `b - a`, in input order.
    pub diffs: Vec<f64>,
}

/// Plot-ready Bland-Altman export: one `(mean, diff)` point per pair plus
/// the three horizontal reference lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanPlot {
    pub points: Vec<(f64, f64)>,
    pub mean_diff: f64,
    pub lower_limit: f64,
    pub upper_limit: f64,
}

/// Ground-truth quality ordering for one case: best first. Orders by
/// maturity (Functional > PoC > DocOnly > NonFunctional), then lower
/// completion time, then fewer errors, then artifact id. Missing
/// measurements sort after measured ones.
pub fn ground_truth_order(case: &RankingCase) -> Vec<&str> {
    let mut ids: Vec<&GroundTruthLabel> = case.labels.values().collect();
    ids.sort_by(|a, b| {
        b.maturity_observed
            .cmp(&a.maturity_observed)
            .then_with(|| {
                let ta = a.completion_minutes.unwrap_or(f64::INFINITY);
                let tb = b.completion_minutes.unwrap_or(f64::INFINITY);
                ta.partial_cmp(&tb).unwrap_or(Ordering::Equal)
            })
            .then_with(|| {
                a.error_count
                    .unwrap_or(u64::MAX)
                    .cmp(&b.error_count.unwrap_or(u64::MAX))
            })
            .then_with(|| a.artifact_id.cmp(&b.artifact_id))
    });
    ids.into_iter().map(|l| l.artifact_id.as_str()).collect()
}

fn check_k(name: &str, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn rate(successes: usize, total: usize, what: &str) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument(format!("no {what} to evaluate")));
    }
    Ok(successes as f64 / total as f64)
}

/// Fraction of cases whose top-k predicted artifacts include at least one
/// Functional exploit. Cases with no Functional label are excluded.
pub fn top_k_success(cases: &[RankingCase], k: usize) -> Result<f64> {
    check_k("k", k)?;
    let mut eligible = 0;
    let mut hits = 0;
    for case in cases {
        case.validate()?;
        if !case.has_functional() {
            continue;
        }
        eligible += 1;
        let hit = case.predicted_order.iter().take(k).any(|id| {
            case.labels[id].maturity_observed == MaturityObserved::Functional
        });
        if hit {
            hits += 1;
        }
    }
    rate(hits, eligible, "cases with a functional exploit")
}

/// Fraction of cases whose single best-labeled artifact appears in the
/// top-k predicted.
pub fn precision_at_k(cases: &[RankingCase], k: usize) -> Result<f64> {
    check_k("k", k)?;
    let mut hits = 0;
    for case in cases {
        case.validate()?;
        let order = ground_truth_order(case);
        let best = order.first().ok_or_else(|| {
            Error::InvalidArgument(format!("case {} has no labels", case.cve_id))
        })?;
        if case.predicted_order.iter().take(k).any(|id| id == best) {
            hits += 1;
        }
    }
    rate(hits, cases.len(), "cases")
}

/// Fraction of cases where the top-k predicted artifacts intersect the
/// top-j ground-truth artifacts.
pub fn recall_k_for_top_j(cases: &[RankingCase], k: usize, j: usize) -> Result<f64> {
    check_k("k", k)?;
    check_k("j", j)?;
    let mut hits = 0;
    for case in cases {
        case.validate()?;
        let order = ground_truth_order(case);
        let top_truth: Vec<&str> = order.into_iter().take(j).collect();
        let hit = case
            .predicted_order
            .iter()
            .take(k)
            .any(|id| top_truth.contains(&id.as_str()));
        if hit {
            hits += 1;
        }
    }
    rate(hits, cases.len(), "cases")
}

/// Analytic random-selection baseline: the fraction of all labeled
/// artifacts that are Functional.
pub fn functional_fraction(cases: &[RankingCase]) -> Result<f64> {
    let total: usize = cases.iter().map(|c| c.labels.len()).sum();
    let functional: usize = cases
        .iter()
        .flat_map(|c| c.labels.values())
        .filter(|l| l.maturity_observed == MaturityObserved::Functional)
        .count();
    rate(functional, total, "labeled artifacts")
}

fn check_paired(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 paired measurements".to_string(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "paired measurements must be finite".to_string(),
        ));
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Bland-Altman agreement: elementwise differences `b - a`, their mean and
/// sample standard deviation, and the ±1.96·SD limits of agreement.
pub fn bland_altman(a: &[f64], b: &[f64]) -> Result<BlandAltman> {
    check_paired(a, b)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean_diff = mean(&diffs);
    let var = diffs
        .iter()
        .map(|d| (d - mean_diff).powi(2))
        .sum::<f64>()
        / (diffs.len() - 1) as f64;
    let sd_diff = var.sqrt();
    let limits = (mean_diff - 1.96 * sd_diff, mean_diff + 1.96 * sd_diff);
    let n_outside = diffs
        .iter()
        .filter(|d| **d < limits.0 || **d > limits.1)
        .count();
    let pct_outside = 100.0 * n_outside as f64 / diffs.len() as f64;
    Ok(BlandAltman { mean_diff, sd_diff, limits, n_outside, pct_outside, diffs })
}

/// Plot-data export for a Bland-Altman chart: x is the pairwise mean,
/// y is the difference, plus the mean and limit lines.
pub fn bland_altman_plot(a: &[f64], b: &[f64]) -> Result<BlandAltmanPlot> {
    let stats = bland_altman(a, b)?;
    let points = a
        .iter()
        .zip(b)
        .map(|(x, y)| ((x + y) / 2.0, y - x))
        .collect();
    Ok(BlandAltmanPlot {
        points,
        mean_diff: stats.mean_diff,
        lower_limit: stats.limits.0,
        upper_limit: stats.limits.1,
    })
}

/// Pearson correlation; `None` when either vector is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let ma = mean(a);
    let mb = mean(b);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

/// Ranks with ties averaged (1-based): equal values share the mean of the
/// positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &idx[i..=j] {
            ranks[slot] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank ties; `None` when either
/// rank vector is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Full agreement report between paired score vectors: Bland-Altman
/// statistics, both correlations, and error magnitudes.
pub fn score_agreement(a: &[f64], b: &[f64]) -> Result<AgreementStats> {
    let ba = bland_altman(a, b)?;
    let mae = ba.diffs.iter().map(|d| d.abs()).sum::<f64>() / ba.diffs.len() as f64;
    let rmse = (ba.diffs.iter().map(|d| d * d).sum::<f64>() / ba.diffs.len() as f64).sqrt();
    Ok(AgreementStats {
        mean_diff: ba.mean_diff,
        sd_diff: ba.sd_diff,
        limits: ba.limits,
        n_outside: ba.n_outside,
        pct_outside: ba.pct_outside,
        pearson: pearson(a, b),
        spearman: spearman(a, b),
        mae,
        rmse,
    })
}

/// Sort `(id, score)` pairs into a descending-score ranking, breaking ties
/// by id so equal scores order deterministically.
pub fn order_by_score(pairs: &[(String, f64)]) -> Vec<String> {
    let mut sorted: Vec<&(String, f64)> = pairs.iter().collect();
    sorted.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    sorted.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Load a two-column `cve_id,score` CSV of baseline scores. A first line
/// of exactly `cve_id,score` is treated as a header and skipped.
pub fn load_baseline_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "cve_id,score") {
            continue;
        }
        let (id, score) = line.split_once(',').ok_or_else(|| {
            Error::Validation {
                path: path.to_path_buf(),
                field: format!("line {}", lineno + 1),
                reason: "expected `cve_id,score`".to_string(),
            }
        })?;
        let value: f64 = score.trim().parse().map_err(|_| Error::Validation {
            path: path.to_path_buf(),
            field: format!("line {}", lineno + 1),
            reason: format!("score `{}` is not a number", score.trim()),
        })?;
        if out.insert(id.trim().to_string(), value).is_some() {
            return Err(Error::Validation {
                path: path.to_path_buf(),
                field: format!("line {}", lineno + 1),
                reason: format!("duplicate cve_id `{}`", id.trim()),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(
        id: &str,
        maturity: MaturityObserved,
        minutes: Option<f64>,
        errors: Option<u64>,
    ) -> GroundTruthLabel {
        GroundTruthLabel {
            artifact_id: id.to_string(),
            maturity_observed: maturity,
            completion_minutes: minutes,
            error_count: errors,
        }
    }

    fn case(cve: &str, order: &[&str], labels: Vec<GroundTruthLabel>) -> RankingCase {
        RankingCase {
            cve_id: cve.to_string(),
            predicted_order: order.iter().map(|s| s.to_string()).collect(),
            labels: labels
                .into_iter()
                .map(|l| (l.artifact_id.clone(), l))
                .collect(),
        }
    }

    #[test]
    fn ground_truth_order_uses_all_tiebreaks() {
        let c = case(
            "CVE-0",
            &["a", "b", "c", "d", "e"],
            vec![
                label("a", MaturityObserved::PoC, Some(5.0), Some(0)),
                label("b", MaturityObserved::Functional, Some(30.0), Some(2)),
                label("c", MaturityObserved::Functional, Some(10.0), Some(2)),
                label("d", MaturityObserved::Functional, Some(10.0), Some(1)),
                label("e", MaturityObserved::Functional, Some(10.0), Some(1)),
            ],
        );
        // Functional before PoC; 10min before 30; 1 error before 2; d before e.
        assert_eq!(ground_truth_order(&c), ["d", "e", "c", "b", "a"]);
    }

    #[test]
    fn missing_measurements_sort_last_within_class() {
        let c = case(
            "CVE-0",
            &["a", "b"],
            vec![
                label("a", MaturityObserved::Functional, None, None),
                label("b", MaturityObserved::Functional, Some(600.0), Some(99)),
            ],
        );
        assert_eq!(ground_truth_order(&c), ["b", "a"]);
    }

    #[test]
    fn top_k_success_window_positions() {
        let c = case(
            "CVE-1",
            &["doc", "func"],
            vec![
                label("doc", MaturityObserved::DocOnly, None, None),
                label("func", MaturityObserved::Functional, Some(5.0), Some(0)),
            ],
        );
        let cases = vec![c];
        assert_eq!(top_k_success(&cases, 1).unwrap(), 0.0);
        assert_eq!(top_k_success(&cases, 2).unwrap(), 1.0);
        // k beyond the list length still sees the whole list.
        assert_eq!(top_k_success(&cases, 10).unwrap(), 1.0);
    }

    #[test]
    fn top_k_excludes_cases_without_functional() {
        let with = case(
            "CVE-1",
            &["f"],
            vec![label("f", MaturityObserved::Functional, None, None)],
        );
        let without = case(
            "CVE-2",
            &["p"],
            vec![label("p", MaturityObserved::PoC, None, None)],
        );
        // The PoC-only case does not drag the rate down.
        assert_eq!(top_k_success(&[with, without], 1).unwrap(), 1.0);
    }

    #[test]
    fn k_zero_is_rejected() {
        let cases = vec![case(
            "CVE-1",
            &["f"],
            vec![label("f", MaturityObserved::Functional, None, None)],
        )];
        assert!(top_k_success(&cases, 0).is_err());
        assert!(precision_at_k(&cases, 0).is_err());
        assert!(recall_k_for_top_j(&cases, 0, 1).is_err());
        assert!(recall_k_for_top_j(&cases, 1, 0).is_err());
    }

    #[test]
    fn precision_counts_best_artifact_in_window() {
        let c = case(
            "CVE-1",
            &["best", "other"],
            vec![
                label("best", MaturityObserved::Functional, Some(1.0), Some(0)),
                label("other", MaturityObserved::PoC, None, None),
            ],
        );
        assert_eq!(precision_at_k(&[c.clone()], 1).unwrap(), 1.0);
        // Full-length window always contains the best artifact.
        assert_eq!(precision_at_k(&[c], 2).unwrap(), 1.0);
    }

    #[test]
    fn recall_trivial_and_disjoint_cases() {
        let c = case(
            "CVE-1",
            &["a", "b"],
            vec![
                label("a", MaturityObserved::DocOnly, None, None),
                label("b", MaturityObserved::Functional, Some(1.0), Some(0)),
            ],
        );
        // j = k = list length.
        assert_eq!(recall_k_for_top_j(&[c.clone()], 2, 2).unwrap(), 1.0);
        // Top-1 predicted is `a`, top-1 truth is `b`: disjoint.
        assert_eq!(recall_k_for_top_j(&[c], 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_order_and_labels_is_invalid() {
        let mut c = case(
            "CVE-1",
            &["a"],
            vec![label("a", MaturityObserved::Functional, None, None)],
        );
        c.predicted_order.push("ghost".to_string());
        assert!(top_k_success(&[c], 1).is_err());
    }

    #[test]
    fn functional_fraction_counts_labels() {
        let c1 = case(
            "CVE-1",
            &["a", "b"],
            vec![
                label("a", MaturityObserved::Functional, None, None),
                label("b", MaturityObserved::PoC, None, None),
            ],
        );
        let c2 = case(
            "CVE-2",
            &["c", "d"],
            vec![
                label("c", MaturityObserved::Functional, None, None),
                label("d", MaturityObserved::Functional, None, None),
            ],
        );
        assert_eq!(functional_fraction(&[c1, c2]).unwrap(), 0.75);
    }

    #[test]
    fn bland_altman_identical_vectors() {
        let a = [0.1, 0.5, 0.9];
        let stats = bland_altman(&a, &a).unwrap();
        assert_eq!(stats.mean_diff, 0.0);
        assert_eq!(stats.sd_diff, 0.0);
        assert_eq!(stats.n_outside, 0);
    }

    #[test]
    fn bland_altman_hand_example() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [0.1, 0.1, 0.1, 0.5];
        let stats = bland_altman(&a, &b).unwrap();
        assert!((stats.mean_diff - 0.2).abs() < 1e-12);
        assert!((stats.sd_diff - 0.2).abs() < 1e-12);
        assert!((stats.limits.0 - (-0.192)).abs() < 1e-12);
        assert!((stats.limits.1 - 0.592).abs() < 1e-12);
        assert_eq!(stats.n_outside, 0);
        assert_eq!(stats.diffs, vec![0.1, 0.1, 0.1, 0.5]);
    }

    #[test]
    fn bland_altman_constant_offset() {
        let a = [0.2, 0.4, 0.8];
        let b: Vec<f64> = a.iter().map(|v| v + 0.05).collect();
        let stats = bland_altman(&a, &b).unwrap();
        assert!((stats.mean_diff - 0.05).abs() < 1e-12);
        assert!(stats.sd_diff.abs() < 1e-12);
    }

    #[test]
    fn bland_altman_rejects_bad_input() {
        assert!(bland_altman(&[1.0], &[1.0]).is_err());
        assert!(bland_altman(&[1.0, 2.0], &[1.0]).is_err());
        assert!(bland_altman(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn plot_export_matches_stats() {
        let a = [0.0, 0.2, 0.4];
        let b = [0.1, 0.1, 0.7];
        let plot = bland_altman_plot(&a, &b).unwrap();
        let stats = bland_altman(&a, &b).unwrap();
        assert_eq!(plot.points.len(), 3);
        assert_eq!(plot.points[0], (0.05, 0.1));
        assert_eq!(plot.mean_diff, stats.mean_diff);
        assert_eq!(plot.lower_limit, stats.limits.0);
        assert_eq!(plot.upper_limit, stats.limits.1);
    }

    #[test]
    fn agreement_on_identical_vectors() {
        let a = [0.1, 0.4, 0.9, 0.3];
        let stats = score_agreement(&a, &a).unwrap();
        assert!((stats.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((stats.spearman.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(stats.mae, 0.0);
        assert_eq!(stats.rmse, 0.0);
    }

    #[test]
    fn exact_anticorrelation() {
        let a = [1.0, 2.0, 3.0];
        let b = [3.0, 2.0, 1.0];
        let stats = score_agreement(&a, &b).unwrap();
        assert!((stats.pearson.unwrap() + 1.0).abs() < 1e-12);
        assert!((stats.spearman.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_has_no_correlation() {
        let a = [0.5, 0.5, 0.5];
        let b = [0.1, 0.2, 0.3];
        let stats = score_agreement(&a, &b).unwrap();
        assert_eq!(stats.pearson, None);
        assert_eq!(stats.spearman, None);
        // Error magnitudes remain defined.
        assert!(stats.mae > 0.0);
    }

    #[test]
    fn rmse_dominates_mae() {
        let a = [0.0, 0.0, 0.0];
        let b = [0.1, 0.4, 0.9];
        let stats = score_agreement(&a, &b).unwrap();
        assert!(stats.rmse >= stats.mae);
    }

    #[test]
    fn average_ranks_handle_ties() {
        // Values 10, 20, 20, 30 -> ranks 1, 2.5, 2.5, 4.
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
        // All tied -> all ranks equal (and spearman undefined).
        assert_eq!(average_ranks(&[7.0, 7.0, 7.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_with_ties_hand_value() {
        // a = (1, 2, 2, 3) ranks (1, 2.5, 2.5, 4); b = (1, 2, 3, 4) ranks
        // (1, 2, 3, 4). Pearson of the rank vectors:
        // cov = 4.5, var_a = 4.5, var_b = 5 -> r = 4.5/sqrt(22.5).
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 4.5 / 22.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn order_by_score_descends_with_id_ties() {
        let pairs = vec![
            ("b".to_string(), 0.5),
            ("a".to_string(), 0.5),
            ("c".to_string(), 0.9),
        ];
        assert_eq!(order_by_score(&pairs), ["c", "a", "b"]);
    }

    #[test]
    fn metrics_depend_only_on_order() {
        // Build the same case from raw scores and from a strictly monotone
        // transformation of them; every metric must agree.
        let scores = vec![
            ("a".to_string(), 0.9),
            ("b".to_string(), 0.4),
            ("c".to_string(), 0.6),
        ];
        let transformed: Vec<(String, f64)> = scores
            .iter()
            .map(|(id, s)| (id.clone(), (s * 3.0f64).exp()))
            .collect();
        let labels = vec![
            label("a", MaturityObserved::PoC, Some(3.0), Some(1)),
            label("b", MaturityObserved::Functional, Some(9.0), Some(0)),
            label("c", MaturityObserved::Functional, Some(2.0), Some(0)),
        ];
        let c1 = RankingCase {
            cve_id: "CVE-1".to_string(),
            predicted_order: order_by_score(&scores),
            labels: labels.iter().cloned().map(|l| (l.artifact_id.clone(), l)).collect(),
        };
        let c2 = RankingCase { predicted_order: order_by_score(&transformed), ..c1.clone() };
        assert_eq!(c1.predicted_order, c2.predicted_order);
        for k in 1..=3 {
            assert_eq!(
                top_k_success(std::slice::from_ref(&c1), k).unwrap(),
                top_k_success(std::slice::from_ref(&c2), k).unwrap()
            );
            assert_eq!(
                precision_at_k(std::slice::from_ref(&c1), k).unwrap(),
                precision_at_k(std::slice::from_ref(&c2), k).unwrap()
            );
        }
    }

    #[test]
    fn baseline_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("epss.csv");
        std::fs::write(&path, "cve_id,score\nCVE-2024-0001,0.53\nCVE-2024-0002,0.01\n")
            .unwrap();
        let map = load_baseline_csv(&path).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["CVE-2024-0001"], 0.53);

        std::fs::write(&path, "CVE-2024-0001,not-a-number\n").unwrap();
        assert!(load_baseline_csv(&path).is_err());

        std::fs::write(&path, "CVE-2024-0001,0.5\nCVE-2024-0001,0.6\n").unwrap();
        assert!(load_baseline_csv(&path).is_err());
    }

    mod oracles {
        use super::*;
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        /// Definitional Pearson written differently from the implementation:
        /// r = (n·Σxy − Σx·Σy) / sqrt((n·Σx² − (Σx)²)(n·Σy² − (Σy)²)).
        fn pearson_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
            let n = a.len() as f64;
            let sx: f64 = a.iter().sum();
            let sy: f64 = b.iter().sum();
            let sxy: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let sxx: f64 = a.iter().map(|x| x * x).sum();
            let syy: f64 = b.iter().map(|y| y * y).sum();
            let denom = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
            if denom == 0.0 {
                None
            } else {
                Some((n * sxy - sx * sy) / denom)
            }
        }

        /// Brute-force rank assignment: for each element, 1 + count of
        /// strictly smaller values + half the count of equal others.
        fn ranks_oracle(values: &[f64]) -> Vec<f64> {
            values
                .iter()
                .map(|v| {
                    let smaller = values.iter().filter(|o| *o < v).count() as f64;
                    let equal = values.iter().filter(|o| *o == v).count() as f64;
                    smaller + (equal + 1.0) / 2.0
                })
                .collect()
        }

        #[test]
        fn correlations_match_definitional_oracles() {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..200 {
                let n = rng.gen_range(2..30);
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0f64..1.0)).collect();
                // Mix continuous values with deliberate ties.
                let b: Vec<f64> = (0..n)
                    .map(|_| (rng.gen_range(0.0f64..1.0) * 4.0).round() / 4.0)
                    .collect();
                match (pearson(&a, &b), pearson_oracle(&a, &b)) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                    (None, None) => {}
                    (x, y) => panic!("pearson disagreement: {x:?} vs {y:?}"),
                }
                assert_eq!(average_ranks(&b), ranks_oracle(&b));
                match (spearman(&a, &b), pearson_oracle(&ranks_oracle(&a), &ranks_oracle(&b))) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                    (None, None) => {}
                    (x, y) => panic!("spearman disagreement: {x:?} vs {y:?}"),
                }
            }
        }

        #[test]
        fn mae_rmse_match_definitions() {
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            for _ in 0..100 {
                let n = rng.gen_range(2..20);
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0f64..1.0)).collect();
                let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0f64..1.0)).collect();
                let stats = score_agreement(&a, &b).unwrap();
                let mae: f64 =
                    a.iter().zip(&b).map(|(x, y)| (y - x).abs()).sum::<f64>() / n as f64;
                let rmse: f64 = (a.iter().zip(&b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>()
                    / n as f64)
                    .sqrt();
                assert!((stats.mae - mae).abs() < 1e-12);
                assert!((stats.rmse - rmse).abs() < 1e-12);
                assert!(stats.rmse >= stats.mae - 1e-12);
            }
        }

        /// Independent brute-force scan over every case, written with
        /// explicit set logic rather than iterator windows.
        fn brute_force_rates(cases: &[RankingCase], k: usize, j: usize) -> (f64, f64, f64) {
            let mut topk_hits = 0.0;
            let mut topk_total = 0.0;
            let mut prec_hits = 0.0;
            let mut recall_hits = 0.0;
            for case in cases {
                let functional: Vec<&str> = case
                    .labels
                    .values()
                    .filter(|l| l.maturity_observed == MaturityObserved::Functional)
                    .map(|l| l.artifact_id.as_str())
                    .collect();
                let window: Vec<&str> = case
                    .predicted_order
                    .iter()
                    .take(k.min(case.predicted_order.len()))
                    .map(|s| s.as_str())
                    .collect();
                if !functional.is_empty() {
                    topk_total += 1.0;
                    if window.iter().any(|id| functional.contains(id)) {
                        topk_hits += 1.0;
                    }
                }
                let truth = ground_truth_order(case);
                if window.contains(&truth[0]) {
                    prec_hits += 1.0;
                }
                let top_truth: Vec<&str> = truth.iter().take(j).copied().collect();
                if window.iter().any(|id| top_truth.contains(id)) {
                    recall_hits += 1.0;
                }
            }
            (
                topk_hits / topk_total,
                prec_hits / cases.len() as f64,
                recall_hits / cases.len() as f64,
            )
        }

        #[test]
        fn ranking_metrics_match_brute_force() {
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let maturities = [
                MaturityObserved::NonFunctional,
                MaturityObserved::DocOnly,
                MaturityObserved::PoC,
                MaturityObserved::Functional,
            ];
            for trial in 0..50 {
                let n_cases = rng.gen_range(2..8);
                let mut cases = Vec::new();
                let mut any_functional = false;
                for c in 0..n_cases {
                    let n_art = rng.gen_range(1..=6);
                    let labels: Vec<GroundTruthLabel> = (0..n_art)
                        .map(|i| {
                            let m = maturities[rng.gen_range(0..4)];
                            if m == MaturityObserved::Functional {
                                any_functional = true;
                            }
                            label(
                                &format!("art-{i}"),
                                m,
                                Some(rng.gen_range(1.0f64..60.0)),
                                Some(rng.gen_range(0..5)),
                            )
                        })
                        .collect();
                    let mut order: Vec<String> =
                        labels.iter().map(|l| l.artifact_id.clone()).collect();
                    order.shuffle(&mut rng);
                    cases.push(RankingCase {
                        cve_id: format!("CVE-{trial}-{c}"),
                        predicted_order: order,
                        labels: labels
                            .into_iter()
                            .map(|l| (l.artifact_id.clone(), l))
                            .collect(),
                    });
                }
                if !any_functional {
                    continue;
                }
                let k = rng.gen_range(1..=6);
                let j = rng.gen_range(1..=6);
                let (topk, prec, recall) = brute_force_rates(&cases, k, j);
                assert_eq!(top_k_success(&cases, k).unwrap(), topk);
                assert_eq!(precision_at_k(&cases, k).unwrap(), prec);
                assert_eq!(recall_k_for_top_j(&cases, k, j).unwrap(), recall);
            }
        }

        #[test]
        fn rates_monotone_in_window_sizes() {
            let mut rng = ChaCha8Rng::seed_from_u64(14);
            let labels: Vec<GroundTruthLabel> = (0..6)
                .map(|i| {
                    label(
                        &format!("art-{i}"),
                        if i % 2 == 0 {
                            MaturityObserved::Functional
                        } else {
                            MaturityObserved::PoC
                        },
                        Some(i as f64 + 1.0),
                        Some(i),
                    )
                })
                .collect();
            let mut order: Vec<String> = labels.iter().map(|l| l.artifact_id.clone()).collect();
            order.shuffle(&mut rng);
            let cases = vec![RankingCase {
                cve_id: "CVE-M".to_string(),
                predicted_order: order,
                labels: labels
                    .into_iter()
                    .map(|l| (l.artifact_id.clone(), l))
                    .collect(),
            }];
            let mut prev_top = 0.0;
            let mut prev_prec = 0.0;
            for k in 1..=6 {
                let t = top_k_success(&cases, k).unwrap();
                let p = precision_at_k(&cases, k).unwrap();
                assert!(t >= prev_top);
                assert!(p >= prev_prec);
                prev_top = t;
                prev_prec = p;
                let mut prev_recall = 0.0;
                for j in 1..=6 {
                    let r = recall_k_for_top_j(&cases, k, j).unwrap();
                    assert!(r >= prev_recall);
                    prev_recall = r;
                }
            }
        }
    }
}
