//! Importance scoring and key-section selection: score = test_importance x
//! w(classification); sections at or above the threshold are key sections.

use super::{CaseError, CoverageConfig};
use crate::analysis::{SectionSummary, SummarySet};

pub fn compute_score(summary: &SectionSummary, config: &CoverageConfig) -> Result<f64, CaseError> {
    let weight = config
        .weight_map
        .get(summary.classification.as_str())
        .ok_or_else(|| CaseError::UnknownClassification(summary.classification.as_str().into()))?;
    Ok(f64::from(summary.test_importance) * weight)
}

/// Exactly the sections with score >= threshold, in document order.
pub fn select_key_sections(
    summaries: &SummarySet,
    config: &CoverageConfig,
) -> Result<Vec<(String, f64)>, CaseError> {
    let mut selected = Vec::new();
    for summary in &summaries.summaries {
        let score = compute_score(summary, config)?;
        if score >= config.threshold {
            selected.push((summary.section_number.clone(), score));
        }
    }
    Ok(selected)
}
