//! Accuracy and efficiency metrics for generated artifacts: validation rate,
//! line recall, similarity via normalized edit distance over line units, and
//! the fix-time / speedup estimate.
//!
//! A "line" is one normalized unit: an API call for tester scripts, a CLI
//! command for device configurations. Blank lines and comments are dropped and
//! equivalent expressions (netmask vs. CIDR notation) are rewritten to a
//! canonical form before comparison.

mod batch;
mod normalize;

pub use batch::{similarity_batch, similarity_batch_sequential};
pub use normalize::{normalize_line, LineKind, NormalizationRules};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("no verdicts supplied")]
    EmptyVerdicts,
    #[error("estimated fix time is zero, speedup undefined")]
    DivisionByZero,
    #[error("{0} must lie in [0,1], got {1}")]
    OutOfRange(&'static str, f64),
    #[error("{0} must be non-negative, got {1}")]
    Negative(&'static str, f64),
}

/// Ordered list of normalized unit strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSequence {
    pub lines: Vec<String>,
}

impl LineSequence {
    /// Normalizes raw text into a unit sequence, dropping blanks and comments.
    pub fn from_text(text: &str, kind: LineKind, rules: &NormalizationRules) -> Self {
        let lines = text
            .lines()
            .filter_map(|l| normalize_line(l, kind, rules))
            .collect();
        Self { lines }
    }

    pub fn from_units(lines: Vec<String>) -> Self {
        Self { lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecallWarning {
    /// Answer empty, output empty as well: recall reported as 1.
    BothEmpty,
    /// Answer empty but output non-empty: recall reported as 0.
    EmptyAnswer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallResult {
    pub value: f64,
    pub matched_lines: usize,
    pub answer_lines: usize,
    pub warning: Option<RecallWarning>,
}

/// Line-by-line recall: the fraction of answer units present in the output,
/// counted as multiset containment (order-insensitive).
pub fn line_recall(answer: &LineSequence, output: &LineSequence) -> RecallResult {
    if answer.is_empty() {
        let warning = if output.is_empty() {
            RecallWarning::BothEmpty
        } else {
            RecallWarning::EmptyAnswer
        };
        return RecallResult {
            value: if output.is_empty() { 1.0 } else { 0.0 },
            matched_lines: 0,
            answer_lines: 0,
            warning: Some(warning),
        };
    }
    let mut available: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for unit in &output.lines {
        *available.entry(unit.as_str()).or_insert(0) += 1;
    }
    let mut matched = 0usize;
    for unit in &answer.lines {
        if let Some(n) = available.get_mut(unit.as_str()) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    RecallResult {
        value: matched as f64 / answer.len() as f64,
        matched_lines: matched,
        answer_lines: answer.len(),
        warning: None,
    }
}

/// Levenshtein distance over line units (insert/delete/substitute, unit cost).
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ua) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, ub) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ua != ub);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub value: f64,
    pub edit_distance: usize,
    pub len_ans: usize,
    pub len_out: usize,
}

/// SIM = 1 - NED = 1 - edit_distance / max(len_ans, len_out).
///
/// Both sequences empty means nothing to edit: SIM = 1.
pub fn similarity(answer: &LineSequence, output: &LineSequence) -> SimilarityResult {
    let distance = edit_distance(&answer.lines, &output.lines);
    let denom = answer.len().max(output.len());
    let value = if denom == 0 {
        1.0
    } else {
        1.0 - distance as f64 / denom as f64
    };
    SimilarityResult {
        value,
        edit_distance: distance,
        len_ans: answer.len(),
        len_out: output.len(),
    }
}

/// VR = passing verdicts / total verdicts.
pub fn validation_rate(verdicts: &[bool]) -> Result<f64, MetricError> {
    if verdicts.is_empty() {
        return Err(MetricError::EmptyVerdicts);
    }
    let passes = verdicts.iter().filter(|v| **v).count();
    Ok(passes as f64 / verdicts.len() as f64)
}

/// Expected end-to-end minutes per artifact once manual touch-up is included:
/// generation time plus the residual manual share (1-VR)(1-SIM) of the full
/// manual effort.
pub fn estimate_fix_time(
    gen_time_min: f64,
    vr: f64,
    sim: f64,
    manual_time_min: f64,
) -> Result<f64, MetricError> {
    for (name, v) in [
        ("gen_time_min", gen_time_min),
        ("manual_time_min", manual_time_min),
    ] {
        if v < 0.0 {
            return Err(MetricError::Negative(name, v));
        }
    }
    for (name, v) in [("VR", vr), ("SIM", sim)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricError::OutOfRange(name, v));
        }
    }
    Ok(gen_time_min + (1.0 - vr) * (1.0 - sim) * manual_time_min)
}

/// Acceleration ratio of the assisted workflow over the manual one.
pub fn speedup(manual_time_min: f64, fix_time_min: f64) -> Result<f64, MetricError> {
    if manual_time_min < 0.0 {
        return Err(MetricError::Negative("manual_time_min", manual_time_min));
    }
    if fix_time_min == 0.0 {
        return Err(MetricError::DivisionByZero);
    }
    Ok(manual_time_min / fix_time_min)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricCounts {
    pub n_validated: usize,
    pub n_total: usize,
    pub matched_lines: usize,
    pub answer_lines: usize,
    pub edit_distance: usize,
    pub len_ans: usize,
    pub len_out: usize,
}

/// Combined report for one artifact kind over a set of cases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub validation_rate: f64,
    pub recall: f64,
    pub similarity: f64,
    pub counts: MetricCounts,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Builds a report from per-case verdicts and answer/output unit pairs.
///
/// Recall and similarity aggregate over the concatenated pairs so that longer
/// artifacts weigh proportionally, matching the per-line definitions.
pub fn build_report(
    verdicts: &[bool],
    pairs: &[(LineSequence, LineSequence)],
) -> Result<MetricReport, MetricError> {
    let vr = validation_rate(verdicts)?;
    let mut warnings = Vec::new();
    let mut matched = 0usize;
    let mut answer_total = 0usize;
    let mut distance = 0usize;
    let mut len_ans = 0usize;
    let mut len_out = 0usize;
    for (answer, output) in pairs {
        let r = line_recall(answer, output);
        if let Some(w) = r.warning {
            warnings.push(format!("recall: {w:?}"));
        }
        matched += r.matched_lines;
        answer_total += r.answer_lines;
        let s = similarity(answer, output);
        distance += s.edit_distance;
        len_ans += s.len_ans;
        len_out += s.len_out;
    }
    let recall = if answer_total == 0 {
        warnings.push("recall: empty answer set".to_string());
        if len_out == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        matched as f64 / answer_total as f64
    };
    let denom = len_ans.max(len_out);
    let sim = if denom == 0 {
        1.0
    } else {
        1.0 - distance as f64 / denom as f64
    };
    Ok(MetricReport {
        validation_rate: vr,
        recall,
        similarity: sim,
        counts: MetricCounts {
            n_validated: verdicts.iter().filter(|v| **v).count(),
            n_total: verdicts.len(),
            matched_lines: matched,
            answer_lines: answer_total,
            edit_distance: distance,
            len_ans,
            len_out,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(units: &[&str]) -> LineSequence {
        LineSequence::from_units(units.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn recall_three_of_four() {
        let answer = seq(&["a", "b", "c", "d"]);
        let output = seq(&["a", "c", "d", "x"]);
        let r = line_recall(&answer, &output);
        assert_eq!(r.value, 0.75);
        assert_eq!(r.matched_lines, 3);
    }

    #[test]
    fn recall_identical_is_one() {
        let answer = seq(&["a", "b"]);
        let r = line_recall(&answer, &answer.clone());
        assert_eq!(r.value, 1.0);
        assert!(r.warning.is_none());
    }

    #[test]
    fn recall_multiset_counts_duplicates() {
        // answer needs "a" twice, output has it once
        let answer = seq(&["a", "a"]);
        let output = seq(&["a"]);
        assert_eq!(line_recall(&answer, &output).value, 0.5);
    }

    #[test]
    fn recall_empty_answer_flags() {
        let empty = seq(&[]);
        let some = seq(&["a"]);
        let both = line_recall(&empty, &empty.clone());
        assert_eq!(both.value, 1.0);
        assert_eq!(both.warning, Some(RecallWarning::BothEmpty));
        let one = line_recall(&empty, &some);
        assert_eq!(one.value, 0.0);
        assert_eq!(one.warning, Some(RecallWarning::EmptyAnswer));
    }

    #[test]
    fn similarity_identical() {
        let a = seq(&["a", "b", "c"]);
        let s = similarity(&a, &a.clone());
        assert_eq!(s.edit_distance, 0);
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn similarity_single_substitution() {
        let a = seq(&["a", "b", "c"]);
        let b = seq(&["a", "b", "d"]);
        let s = similarity(&a, &b);
        assert_eq!(s.edit_distance, 1);
        assert!((s.value - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn similarity_empty_vs_five() {
        let a = seq(&[]);
        let b = seq(&["1", "2", "3", "4", "5"]);
        let s = similarity(&a, &b);
        assert_eq!(s.edit_distance, 5);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn similarity_both_empty_is_one() {
        let a = seq(&[]);
        assert_eq!(similarity(&a, &a.clone()).value, 1.0);
    }

    #[test]
    fn validation_rate_reference_fractions() {
        let mut verdicts = vec![true; 26];
        verdicts.extend(vec![false; 3]);
        let vr = validation_rate(&verdicts).unwrap();
        assert!((vr - 0.897).abs() < 0.0005, "26/29 = {vr}");
        let mut verdicts = vec![true; 27];
        verdicts.extend(vec![false; 2]);
        let vr = validation_rate(&verdicts).unwrap();
        assert!((vr - 0.931).abs() < 0.0005, "27/29 = {vr}");
        assert_eq!(validation_rate(&[true, true]).unwrap(), 1.0);
        assert!(matches!(
            validation_rate(&[]),
            Err(MetricError::EmptyVerdicts)
        ));
    }

    #[test]
    fn fix_time_reference_arithmetic() {
        let fix = estimate_fix_time(9.10, 0.897, 0.724, 104.4).unwrap();
        assert!((fix - 12.07).abs() <= 0.05, "fix = {fix}");
        let ratio = speedup(104.4, fix).unwrap();
        assert!((ratio - 8.65).abs() <= 0.02, "speedup = {ratio}");
    }

    #[test]
    fn fix_time_perfect_vr_is_gen_time() {
        let fix = estimate_fix_time(9.10, 1.0, 0.0, 104.4).unwrap();
        assert_eq!(fix, 9.10);
    }

    #[test]
    fn speedup_zero_fix_time_errors() {
        assert!(matches!(
            speedup(10.0, 0.0),
            Err(MetricError::DivisionByZero)
        ));
    }

    #[test]
    fn fix_time_rejects_out_of_range() {
        assert!(estimate_fix_time(1.0, 1.5, 0.5, 1.0).is_err());
        assert!(estimate_fix_time(-1.0, 0.5, 0.5, 1.0).is_err());
    }
}
