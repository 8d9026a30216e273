//! Fault corrector: signature normalization, experience-pool matching, and
//! the generic category-template fallback.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::kb::ExperiencePool;
use crate::loops::{FaultCategory, FaultReport};

static ADDRESS_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}(?:/\d{1,2})?\b").expect("static regex")
});
static NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").expect("static regex"));

/// Normalizes an error message into a matchable signature: lowercase,
/// addresses then digits collapsed to placeholders, whitespace collapsed.
pub fn normalize_signature(message: &str) -> String {
    let lower = message.to_lowercase();
    let without_addresses = ADDRESS_RE.replace_all(&lower, "ADDR");
    let without_numbers = NUMBER_RE.replace_all(&without_addresses, "#");
    without_numbers
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Generic per-category fix texts, data-driven.
#[derive(Debug, Clone)]
pub struct FixTemplates {
    templates: BTreeMap<String, String>,
}

impl FixTemplates {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let templates: BTreeMap<String, String> = serde_json::from_str(json)?;
        Ok(Self { templates })
    }

    pub fn for_category(&self, category: FaultCategory) -> String {
        self.templates
            .get(category.as_str())
            .cloned()
            .unwrap_or_else(|| "Re-check the failing step against the documentation.".to_string())
    }
}

impl Default for FixTemplates {
    fn default() -> Self {
        Self::from_json(crate::datafiles::FIX_TEMPLATES).expect("embedded templates valid")
    }
}

/// Proposes a candidate fix for a classified fault: the best experience-pool
/// match above the similarity cutoff (hit count incremented), otherwise the
/// generic category template. Returns the fix text and the matched signature,
/// if any.
pub fn correct(
    fault: &FaultReport,
    pool: &mut ExperiencePool,
    templates: &FixTemplates,
    cutoff: f64,
) -> (String, Option<String>) {
    let signature = normalize_signature(&fault.evidence);
    if let Some(entry) = pool.find_best(&signature, cutoff) {
        return (
            entry.resolution.clone(),
            Some(entry.error_signature.clone()),
        );
    }
    (templates.for_category(fault.category), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fault(category: FaultCategory, evidence: &str) -> FaultReport {
        FaultReport {
            category,
            evidence: evidence.to_string(),
            source_events: vec![0],
        }
    }

    #[test]
    fn signature_collapses_addresses_and_digits() {
        assert_eq!(
            normalize_signature("Unknown command: ip addres 10.0.0.1/24 on line 7"),
            "unknown command: ip addres ADDR on line #"
        );
    }

    #[test]
    fn exact_pool_match_returns_resolution_and_bumps_hits() {
        let mut pool = ExperiencePool::default();
        let sig = normalize_signature("unknown command: ip addres 10.0.0.1/24");
        pool.record(&sig, FaultCategory::SyntaxError, "use `ip address`", "seed");
        let f = fault(
            FaultCategory::SyntaxError,
            "unknown command: ip addres 192.168.5.9/16",
        );
        let (fix, matched) = correct(&f, &mut pool, &FixTemplates::default(), 0.8);
        assert_eq!(fix, "use `ip address`");
        assert_eq!(matched.as_deref(), Some(sig.as_str()));
        assert_eq!(pool.entries()[0].hit_count, 1);
    }

    #[test]
    fn empty_pool_gives_category_template() {
        let mut pool = ExperiencePool::default();
        let f = fault(FaultCategory::AssertionFailure, "expected route missing");
        let (fix, matched) = correct(&f, &mut pool, &FixTemplates::default(), 0.8);
        assert!(matched.is_none());
        assert!(fix.contains("expected result"), "template text: {fix}");
    }

    #[test]
    fn near_miss_matches_at_cutoff() {
        let mut pool = ExperiencePool::default();
        // 10-token signature; the probe differs in one token -> overlap 0.8
        let sig = "alpha bravo charlie delta echo foxtrot golf hotel india juliett";
        pool.record(sig, FaultCategory::Environment, "reseat", "seed");
        let close = fault(
            FaultCategory::Environment,
            "alpha bravo charlie delta echo foxtrot golf hotel india kilo",
        );
        let far = fault(
            FaultCategory::Environment,
            "alpha bravo charlie delta mike november oscar papa quebec romeo",
        );
        let (_, matched) = correct(&close, &mut pool, &FixTemplates::default(), 0.8);
        assert!(
            matched.is_some(),
            "9/10 token overlap passes the 0.8 cutoff"
        );
        let (_, matched) = correct(&far, &mut pool, &FixTemplates::default(), 0.8);
        assert!(matched.is_none(), "4/10 overlap fails the cutoff");
    }
}
