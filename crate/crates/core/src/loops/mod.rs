//! The two feedback loops: the small loop refines executable artifacts
//! against the testbed (rounds within attempts, bounded); the large loop
//! escalates persistent failures to test-case regeneration and, only after
//! that fails, to manual review.

mod classify;
mod large;
mod small;

pub use classify::{classify, FaultRules};

pub use large::{escalate, EscalationDeps, LargeLoopOutcome};
pub use small::{run_small_loop, LoopTrace, RoundTrace, SmallLoopDeps, SmallLoopOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Forge(#[from] crate::forge::ForgeError),
    #[error(transparent)]
    Case(#[from] crate::testcase::CaseError),
    #[error("escalation ticket for {0} has an empty history")]
    EmptyTicketHistory(String),
    #[error("invalid loop rules: {0}")]
    InvalidRules(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultCategory {
    SyntaxError,
    ConfigurationMismatch,
    UnsupportedCommand,
    AssertionFailure,
    Environment,
}

impl FaultCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            FaultCategory::SyntaxError => "syntax_error",
            FaultCategory::ConfigurationMismatch => "configuration_mismatch",
            FaultCategory::UnsupportedCommand => "unsupported_command",
            FaultCategory::AssertionFailure => "assertion_failure",
            FaultCategory::Environment => "environment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultReport {
    pub category: FaultCategory,
    /// Log excerpt that triggered the report.
    pub evidence: String,
    /// Indices into the execution log's event list.
    pub source_events: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopConfig {
    pub max_rounds_per_attempt: u32,
    pub max_attempts: u32,
    /// How many regeneration passes the large loop may take before flagging
    /// manual review.
    pub max_regeneration_passes: u32,
    /// Token-overlap cutoff for experience-pool matching.
    pub similarity_cutoff: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_rounds_per_attempt: 10,
            max_attempts: 3,
            max_regeneration_passes: 1,
            similarity_cutoff: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspectedOrigin {
    DutDefectOrDocs,
    TesterLimitation,
    TestCaseFlaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    RegenerateCase,
    ManualReview,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub rounds: u32,
    pub faults: Vec<FaultReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscalationTicket {
    pub case_id: String,
    pub suspected_origin: SuspectedOrigin,
    pub history: Vec<AttemptRecord>,
    pub disposition: Disposition,
}

/// Named predicates the origin rules file can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OriginPredicate {
    /// Any unsupported-command fault anywhere in the history.
    UnsupportedCommand,
    /// A configuration mismatch present in every attempt.
    ConfigurationMismatchPersistent,
    /// An attempt whose only failures were assertions (clean deployment).
    AssertionFailureAfterCleanDeploy,
    Default,
}

impl OriginPredicate {
    fn holds(&self, history: &[AttemptRecord]) -> bool {
        match self {
            OriginPredicate::UnsupportedCommand => history.iter().any(|a| {
                a.faults
                    .iter()
                    .any(|f| f.category == FaultCategory::UnsupportedCommand)
            }),
            OriginPredicate::ConfigurationMismatchPersistent => {
                !history.is_empty()
                    && history.iter().all(|a| {
                        a.faults
                            .iter()
                            .any(|f| f.category == FaultCategory::ConfigurationMismatch)
                    })
            }
            OriginPredicate::AssertionFailureAfterCleanDeploy => history.iter().any(|a| {
                !a.faults.is_empty()
                    && a.faults
                        .iter()
                        .all(|f| f.category == FaultCategory::AssertionFailure)
            }),
            OriginPredicate::Default => true,
        }
    }
}

/// Ordered suspected-origin rules, loaded from a data file.
#[derive(Debug)]
pub struct OriginRules {
    rules: Vec<(OriginPredicate, SuspectedOrigin)>,
}

impl OriginRules {
    pub fn from_json(json: &str) -> Result<Self, LoopError> {
        #[derive(Deserialize)]
        struct RawRule {
            when: String,
            origin: String,
        }
        let raw: Vec<RawRule> =
            serde_json::from_str(json).map_err(|e| LoopError::InvalidRules(e.to_string()))?;
        let mut rules = Vec::new();
        for r in raw {
            let predicate = match r.when.as_str() {
                "unsupported_command" => OriginPredicate::UnsupportedCommand,
                "configuration_mismatch_persistent" => {
                    OriginPredicate::ConfigurationMismatchPersistent
                }
                "assertion_failure_after_clean_deploy" => {
                    OriginPredicate::AssertionFailureAfterCleanDeploy
                }
                "default" => OriginPredicate::Default,
                other => {
                    return Err(LoopError::InvalidRules(format!(
                        "unknown origin predicate `{other}`"
                    )))
                }
            };
            let origin = match r.origin.as_str() {
                "dut_defect_or_docs" => SuspectedOrigin::DutDefectOrDocs,
                "tester_limitation" => SuspectedOrigin::TesterLimitation,
                "test_case_flaw" => SuspectedOrigin::TestCaseFlaw,
                other => {
                    return Err(LoopError::InvalidRules(format!(
                        "unknown suspected origin `{other}`"
                    )))
                }
            };
            rules.push((predicate, origin));
        }
        Ok(Self { rules })
    }

    pub fn evaluate(&self, history: &[AttemptRecord]) -> SuspectedOrigin {
        for (predicate, origin) in &self.rules {
            if predicate.holds(history) {
                return *origin;
            }
        }
        SuspectedOrigin::TestCaseFlaw
    }
}

impl Default for OriginRules {
    fn default() -> Self {
        Self::from_json(crate::datafiles::ORIGIN_RULES).expect("embedded rules valid")
    }
}

/// Suspected-origin heuristic over the attempt history, using the shipped
/// rule table.
pub fn suspect_origin(history: &[AttemptRecord]) -> SuspectedOrigin {
    OriginRules::default().evaluate(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attempt(categories: &[FaultCategory]) -> AttemptRecord {
        AttemptRecord {
            rounds: 10,
            faults: categories
                .iter()
                .map(|c| FaultReport {
                    category: *c,
                    evidence: "e".into(),
                    source_events: vec![0],
                })
                .collect(),
        }
    }

    #[test]
    fn origin_heuristic_ordering() {
        assert_eq!(
            suspect_origin(&[attempt(&[FaultCategory::UnsupportedCommand])]),
            SuspectedOrigin::TesterLimitation
        );
        assert_eq!(
            suspect_origin(&[
                attempt(&[FaultCategory::ConfigurationMismatch]),
                attempt(&[FaultCategory::ConfigurationMismatch]),
            ]),
            SuspectedOrigin::DutDefectOrDocs
        );
        assert_eq!(
            suspect_origin(&[
                attempt(&[FaultCategory::ConfigurationMismatch]),
                attempt(&[FaultCategory::AssertionFailure]),
            ]),
            SuspectedOrigin::TestCaseFlaw,
            "mismatch must persist across every attempt"
        );
    }
}
