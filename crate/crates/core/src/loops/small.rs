//! The small loop: draft, deploy, execute, classify, correct, redraft.
//! A new attempt clears the conversation context (hints) but keeps the
//! experience pool; escalation happens only after every attempt is spent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classify::{classify, FaultRules};
use super::{
    suspect_origin, AttemptRecord, Disposition, EscalationTicket, FaultCategory, FaultReport,
    LoopConfig, LoopError,
};
use crate::forge::{
    correct, draft_artifact, normalize_signature, orchestrate, retrieve, update_subagents,
    CaseRunRecord, ExecutableArtifact, FixTemplates, TaskKnowledgeBase,
};
use crate::gateway::{Gateway, PromptTemplate};
use crate::testbed::Testbed;
use crate::testcase::TestCase;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrace {
    pub attempt: u32,
    pub round: u32,
    pub faults: Vec<FaultReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoopTrace {
    pub case_id: String,
    pub rounds: Vec<RoundTrace>,
}

#[derive(Debug)]
pub enum SmallLoopOutcome {
    Pass {
        artifact: ExecutableArtifact,
        rounds: u32,
        attempt: u32,
        trace: LoopTrace,
        /// api calls observed on the final, passing execution
        observed_calls: Vec<String>,
        /// the final execution's event log
        final_log: crate::testbed::ExecutionLog,
    },
    Escalated(EscalationTicket, LoopTrace),
}

impl SmallLoopOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, SmallLoopOutcome::Pass { .. })
    }
}

/// Everything the small loop needs besides the case itself.
pub struct SmallLoopDeps<'a> {
    pub kb: &'a mut TaskKnowledgeBase,
    pub testbed: &'a Testbed,
    pub gateway: &'a Gateway,
    pub templates: &'a BTreeMap<String, PromptTemplate>,
    pub fault_rules: &'a FaultRules,
    pub fix_templates: &'a FixTemplates,
    pub max_repairs: u32,
}

/// Runs the small loop for one case. Per round: draft (schema-validated by
/// construction) -> deploy -> execute -> classify -> correct. Passing means
/// zero failure events and at least one executed expectation check. After
/// `max_rounds_per_attempt` rounds the attempt's context resets; after
/// `max_attempts` attempts the case escalates.
pub fn run_small_loop(
    case: &TestCase,
    deps: &mut SmallLoopDeps<'_>,
    cfg: &LoopConfig,
) -> Result<SmallLoopOutcome, LoopError> {
    let mut trace = LoopTrace {
        case_id: case.case_id.clone(),
        rounds: Vec::new(),
    };
    let mut history: Vec<AttemptRecord> = Vec::new();
    for attempt in 1..=cfg.max_attempts {
        // fresh context per attempt: hints and first-seen bookkeeping reset,
        // the experience pool persists
        let mut hints: Vec<String> = Vec::new();
        let mut first_seen: BTreeMap<String, (u32, FaultCategory)> = BTreeMap::new();
        let mut fix_used: BTreeMap<String, String> = BTreeMap::new();
        let mut last_faults: Vec<FaultReport> = Vec::new();
        let mut retrieval_misses: Vec<(String, String)> = Vec::new();

        let intents = orchestrate(
            case,
            &deps.kb.few_shots,
            deps.gateway,
            deps.templates,
            deps.max_repairs,
        )?;
        let query = format!("{} {}", case.title, intents.config_intents.join(" "));
        let retrieved = retrieve(&deps.kb.index, &query, 3)?;
        for entry in retrieved.iter().filter(|e| e.low_confidence) {
            retrieval_misses.push((query.clone(), entry.payload_ref.clone()));
        }

        for round in 1..=cfg.max_rounds_per_attempt {
            let artifact = draft_artifact(
                case,
                &intents,
                deps.kb,
                &retrieved,
                &hints,
                deps.gateway,
                deps.templates,
                deps.max_repairs,
            )?;
            let (log, observed_calls) = deps
                .testbed
                .execute(&artifact.dut_config, &artifact.tester_script);
            let mut faults = classify(&log, deps.fault_rules);
            let checks_ran = log.events.iter().any(|e| {
                matches!(
                    e.kind,
                    crate::testbed::EventKind::AssertionPass
                        | crate::testbed::EventKind::AssertionFail
                )
            });
            if faults.is_empty() && !checks_ran {
                faults.push(FaultReport {
                    category: FaultCategory::AssertionFailure,
                    evidence: "script verifies none of the expected results".to_string(),
                    source_events: Vec::new(),
                });
            }
            let passed = faults.is_empty();
            trace.rounds.push(RoundTrace {
                attempt,
                round,
                faults: faults.clone(),
                passed,
            });
            if passed {
                // issues that appeared in earlier rounds of this attempt were
                // resolved by retrying: persist them for the fault corrector
                let resolved_after_retry: Vec<(String, FaultCategory, String)> = first_seen
                    .iter()
                    .filter(|(_, (seen_round, _))| *seen_round < round)
                    .map(|(sig, (_, category))| {
                        let fix = fix_used
                            .get(sig)
                            .cloned()
                            .unwrap_or_else(|| "resolved by redrafting".to_string());
                        (sig.clone(), *category, fix)
                    })
                    .collect();
                let outcome = CaseRunRecord {
                    case_id: case.case_id.clone(),
                    passed: true,
                    rounds: round,
                    resolved_after_retry,
                    retrieval_misses,
                    intents: Some(intents.clone()),
                    case_title: case.title.clone(),
                };
                update_subagents(deps.kb, &outcome);
                return Ok(SmallLoopOutcome::Pass {
                    artifact,
                    rounds: round,
                    attempt,
                    trace,
                    observed_calls,
                    final_log: log,
                });
            }
            hints.clear();
            for fault in &faults {
                let signature = normalize_signature(&fault.evidence);
                first_seen
                    .entry(signature.clone())
                    .or_insert((round, fault.category));
                let (fix, _) = correct(
                    fault,
                    &mut deps.kb.pool,
                    deps.fix_templates,
                    cfg.similarity_cutoff,
                );
                let hint = format!("{} -> {}", fault.evidence, fix);
                fix_used.insert(signature, fix);
                if !hints.contains(&hint) {
                    hints.push(hint);
                }
            }
            last_faults = faults;
        }
        history.push(AttemptRecord {
            rounds: cfg.max_rounds_per_attempt,
            faults: last_faults,
        });
        let outcome = CaseRunRecord {
            case_id: case.case_id.clone(),
            passed: false,
            rounds: cfg.max_rounds_per_attempt,
            resolved_after_retry: Vec::new(),
            retrieval_misses,
            intents: Some(intents),
            case_title: case.title.clone(),
        };
        update_subagents(deps.kb, &outcome);
    }
    let suspected_origin = suspect_origin(&history);
    let ticket = EscalationTicket {
        case_id: case.case_id.clone(),
        suspected_origin,
        history,
        disposition: Disposition::RegenerateCase,
    };
    Ok(SmallLoopOutcome::Escalated(ticket, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{drafting_backend, typo_case, unfixable_case};

    fn deps<'a>(
        kb: &'a mut TaskKnowledgeBase,
        testbed: &'a Testbed,
        gateway: &'a Gateway,
        templates: &'a BTreeMap<String, PromptTemplate>,
        rules: &'a FaultRules,
        fixes: &'a FixTemplates,
    ) -> SmallLoopDeps<'a> {
        SmallLoopDeps {
            kb,
            testbed,
            gateway,
            templates,
            fault_rules: rules,
            fix_templates: fixes,
            max_repairs: 3,
        }
    }

    #[test]
    fn clean_first_draft_passes_round_one() {
        let mut kb = TaskKnowledgeBase::minimal_for_tests();
        let testbed = Testbed::with_defaults();
        let gateway = Gateway::with_backend(Box::new(drafting_backend()));
        let templates = crate::datafiles::default_templates();
        let rules = FaultRules::default();
        let fixes = FixTemplates::default();
        let case = typo_case("TC-CLEAN-0001");
        let mut d = deps(&mut kb, &testbed, &gateway, &templates, &rules, &fixes);
        match run_small_loop(&case, &mut d, &LoopConfig::default()).unwrap() {
            SmallLoopOutcome::Pass {
                rounds, attempt, ..
            } => {
                assert_eq!(rounds, 1);
                assert_eq!(attempt, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn typo_fixed_in_round_two() {
        let mut kb = TaskKnowledgeBase::minimal_for_tests();
        let testbed = Testbed::with_defaults();
        let gateway = Gateway::with_backend(Box::new(drafting_backend()));
        let templates = crate::datafiles::default_templates();
        let rules = FaultRules::default();
        let fixes = FixTemplates::default();
        let case = typo_case("TC-TYPO-0001");
        let mut d = deps(&mut kb, &testbed, &gateway, &templates, &rules, &fixes);
        match run_small_loop(&case, &mut d, &LoopConfig::default()).unwrap() {
            SmallLoopOutcome::Pass {
                rounds,
                attempt,
                trace,
                ..
            } => {
                assert_eq!(rounds, 2);
                assert_eq!(attempt, 1);
                assert!(!trace.rounds[0].passed);
                assert!(trace.rounds[1].passed);
            }
            other => panic!("unexpected {other:?}"),
        }
        // the multi-round fix entered the experience pool
        assert_eq!(kb.pool.len(), 1);
    }

    #[test]
    fn unfixable_fault_escalates_after_bounds() {
        let mut kb = TaskKnowledgeBase::minimal_for_tests();
        let testbed = Testbed::with_defaults();
        let gateway = Gateway::with_backend(Box::new(drafting_backend()));
        let templates = crate::datafiles::default_templates();
        let rules = FaultRules::default();
        let fixes = FixTemplates::default();
        let case = unfixable_case("TC-DOOM-0001");
        let cfg = LoopConfig::default();
        let mut d = deps(&mut kb, &testbed, &gateway, &templates, &rules, &fixes);
        match run_small_loop(&case, &mut d, &cfg).unwrap() {
            SmallLoopOutcome::Escalated(ticket, trace) => {
                assert_eq!(ticket.history.len(), 3, "three attempts");
                assert!(ticket.history.iter().all(|a| a.rounds == 10));
                assert_eq!(trace.rounds.len(), 30, "3 attempts x 10 rounds");
                assert_eq!(ticket.disposition, Disposition::RegenerateCase);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
