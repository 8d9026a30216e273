//! Fault classification: every failure event in an execution log maps to
//! exactly one fault report, by event kind plus ordered pattern rules.

use serde::{Deserialize, Serialize};

use super::{FaultCategory, FaultReport, LoopError};
use crate::testbed::{EventKind, ExecutionLog};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawRule {
    event: String,
    pattern: String,
    category: String,
}

#[derive(Debug)]
struct Rule {
    event: EventKind,
    pattern: regex::Regex,
    category: FaultCategory,
}

/// Ordered first-match classification rules, loaded from a data file.
#[derive(Debug)]
pub struct FaultRules {
    rules: Vec<Rule>,
}

impl FaultRules {
    pub fn from_json(json: &str) -> Result<Self, LoopError> {
        let raw: Vec<RawRule> =
            serde_json::from_str(json).map_err(|e| LoopError::InvalidRules(e.to_string()))?;
        let mut rules = Vec::new();
        for r in raw {
            let event = match r.event.as_str() {
                "config_reject" => EventKind::ConfigReject,
                "api_error" => EventKind::ApiError,
                "assertion_fail" => EventKind::AssertionFail,
                other => {
                    return Err(LoopError::InvalidRules(format!(
                        "`{other}` is not a failure event kind"
                    )))
                }
            };
            let category = match r.category.as_str() {
                "syntax_error" => FaultCategory::SyntaxError,
                "configuration_mismatch" => FaultCategory::ConfigurationMismatch,
                "unsupported_command" => FaultCategory::UnsupportedCommand,
                "assertion_failure" => FaultCategory::AssertionFailure,
                "environment" => FaultCategory::Environment,
                other => {
                    return Err(LoopError::InvalidRules(format!(
                        "`{other}` is not a fault category"
                    )))
                }
            };
            let pattern = regex::Regex::new(&r.pattern)
                .map_err(|e| LoopError::InvalidRules(format!("{}: {e}", r.pattern)))?;
            rules.push(Rule {
                event,
                pattern,
                category,
            });
        }
        Ok(Self { rules })
    }

    fn categorize(&self, kind: EventKind, detail: &str) -> FaultCategory {
        for rule in &self.rules {
            if rule.event == kind && rule.pattern.is_match(detail) {
                return rule.category;
            }
        }
        // every failure event must land somewhere
        match kind {
            EventKind::ConfigReject => FaultCategory::ConfigurationMismatch,
            EventKind::ApiError => FaultCategory::Environment,
            _ => FaultCategory::AssertionFailure,
        }
    }
}

impl Default for FaultRules {
    fn default() -> Self {
        Self::from_json(crate::datafiles::FAULT_RULES).expect("embedded rules valid")
    }
}

/// Classifies an execution log. Every failure event yields exactly one
/// report.
pub fn classify(log: &ExecutionLog, rules: &FaultRules) -> Vec<FaultReport> {
    log.failures()
        .map(|(index, event)| FaultReport {
            category: rules.categorize(event.kind, &event.detail),
            evidence: event.detail.clone(),
            source_events: vec![index],
        })
        .collect()
}
