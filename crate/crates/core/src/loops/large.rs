//! The large loop: feedback from persistent small-loop failures is routed
//! back to test-case generation. Regenerated cases run the small loop again;
//! only when they also fail is the ticket flagged for manual review.

use std::collections::BTreeMap;

use super::small::{run_small_loop, SmallLoopDeps, SmallLoopOutcome};
use super::{Disposition, EscalationTicket, LoopConfig, LoopError};
use crate::forge::ExecutableArtifact;
use crate::ingest::SpecTree;
use crate::testcase::TestCase;

#[derive(Debug)]
pub enum LargeLoopOutcome {
    Resolved {
        new_cases: Vec<TestCase>,
        artifact: ExecutableArtifact,
        ticket: EscalationTicket,
    },
    ManualReview(EscalationTicket),
}

pub struct EscalationDeps<'a> {
    pub tree: &'a SpecTree,
    pub original_case: &'a TestCase,
}

/// Escalates one ticket: regenerate the case targeting the suspected cause,
/// rerun the small loop, and either resolve or flag for manual review.
/// Manual review is never reached without at least one regeneration pass.
pub fn escalate(
    ticket: EscalationTicket,
    escalation: &EscalationDeps<'_>,
    deps: &mut SmallLoopDeps<'_>,
    cfg: &LoopConfig,
) -> Result<LargeLoopOutcome, LoopError> {
    if ticket.history.is_empty() {
        return Err(LoopError::EmptyTicketHistory(ticket.case_id));
    }
    let history_text = ticket
        .history
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let faults = a
                .faults
                .iter()
                .map(|f| format!("{}: {}", f.category.as_str(), f.evidence))
                .collect::<Vec<_>>()
                .join("; ");
            format!(
                "attempt {}: {} round(s), faults: {}",
                i + 1,
                a.rounds,
                faults
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let template = deps
        .templates
        .get("regenerate_case")
        .expect("template registered");
    let mut new_cases = Vec::new();
    for pass in 1..=cfg.max_regeneration_passes {
        let mut bindings = BTreeMap::new();
        bindings.insert(
            "case".to_string(),
            serde_json::to_string_pretty(escalation.original_case).unwrap_or_default(),
        );
        bindings.insert(
            "suspected_origin".to_string(),
            format!("{:?}", ticket.suspected_origin),
        );
        bindings.insert("history".to_string(), history_text.clone());
        let prompt = template
            .render(&bindings)
            .map_err(crate::forge::ForgeError::from)?;
        let completed = deps
            .gateway
            .complete_structured(&prompt, &crate::testcase::case_schema(), deps.max_repairs)
            .map_err(crate::forge::ForgeError::from)?;
        let case_id = format!("{}-RGN-{:02}", escalation.original_case.case_id, pass);
        let (case, _) = crate::testcase::case_from_value(
            &completed.value,
            &case_id,
            &escalation.original_case.reference_sections,
            escalation.tree,
        );
        new_cases.push(case.clone());
        match run_small_loop(&case, deps, cfg)? {
            SmallLoopOutcome::Pass { artifact, .. } => {
                return Ok(LargeLoopOutcome::Resolved {
                    new_cases,
                    artifact,
                    ticket: EscalationTicket {
                        disposition: Disposition::RegenerateCase,
                        ..ticket
                    },
                });
            }
            SmallLoopOutcome::Escalated(_, _) => continue,
        }
    }
    Ok(LargeLoopOutcome::ManualReview(EscalationTicket {
        disposition: Disposition::ManualReview,
        ..ticket
    }))
}
