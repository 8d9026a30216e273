//! Executable artifact generation: a core drafting agent backed by a task
//! knowledge base and three continuously-updated sub-agents (fault corrector,
//! summarizer, orchestrator).

mod correct;
mod draft;
mod kb;
mod retrieve;

pub use correct::{correct, normalize_signature, FixTemplates};
pub use draft::{draft_artifact, orchestrate, ExecutableArtifact, FineGrainedIntent};
pub use kb::{
    ExperienceEntry, ExperiencePool, FewShotExample, SummaryIndexNode, TaskInfo, TaskKnowledgeBase,
};
pub use retrieve::{retrieve, RetrievedEntry};

use thiserror::Error;

use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("test case rejected before prompting: {0}")]
    InvalidCase(String),
    #[error("summary index has no leaf entries")]
    EmptyIndex,
    #[error("knowledge base error: {0}")]
    KnowledgeBase(String),
    #[error("artifact generation exhausted its attempts for case {case_id}")]
    AttemptsExhausted { case_id: String },
}

/// What happened to one case run, as far as the sub-agents care: did the
/// artifact pass, how many rounds it took, which faults were resolved with
/// which fixes, and which retrievals missed.
#[derive(Debug, Clone, Default)]
pub struct CaseRunRecord {
    pub case_id: String,
    pub passed: bool,
    pub rounds: u32,
    /// (signature, category, resolution) for issues that took more than one
    /// round to clear.
    pub resolved_after_retry: Vec<(String, crate::loops::FaultCategory, String)>,
    /// Queries the summarizer failed to serve, with the payload that was
    /// found by other means.
    pub retrieval_misses: Vec<(String, String)>,
    /// Intents that drove this run, candidate few-shot material.
    pub intents: Option<FineGrainedIntent>,
    pub case_title: String,
}

/// Runs the SOP-guided generation session for one case: orchestrate, retrieve,
/// draft, deploy, execute, correct, redraft, bounded by the loop config.
/// Returns the first artifact passing the testbed checks along with the round
/// and attempt it passed on; exhausted attempts surface as
/// [`ForgeError::AttemptsExhausted`] and the escalation moves to the large
/// loop.
pub fn generate(
    case: &crate::testcase::TestCase,
    deps: &mut crate::loops::SmallLoopDeps<'_>,
    loop_cfg: &crate::loops::LoopConfig,
) -> Result<(ExecutableArtifact, u32, u32), ForgeError> {
    match crate::loops::run_small_loop(case, deps, loop_cfg) {
        Ok(crate::loops::SmallLoopOutcome::Pass {
            artifact,
            rounds,
            attempt,
            ..
        }) => Ok((artifact, rounds, attempt)),
        Ok(crate::loops::SmallLoopOutcome::Escalated(_, _)) => Err(ForgeError::AttemptsExhausted {
            case_id: case.case_id.clone(),
        }),
        Err(crate::loops::LoopError::Forge(e)) => Err(e),
        Err(other) => Err(ForgeError::KnowledgeBase(other.to_string())),
    }
}

/// Continuous update of the three sub-agents from a finished run.
///
/// - fault corrector: multi-round-resolved issues enter the experience pool;
/// - summarizer: missed retrievals get their index summaries rewritten from
///   the payload that eventually served the query;
/// - orchestrator: few-shot examples are re-weighted by pass rate, successful
///   runs can contribute a fresh example.
pub fn update_subagents(kb: &mut TaskKnowledgeBase, outcome: &CaseRunRecord) {
    for (signature, category, resolution) in &outcome.resolved_after_retry {
        kb.pool
            .record(signature, *category, resolution, &outcome.case_id);
    }
    for (query, payload) in &outcome.retrieval_misses {
        kb.index.refresh_summary(query, payload);
    }
    for example in &mut kb.few_shots {
        if outcome.passed {
            if outcome
                .intents
                .as_ref()
                .is_some_and(|i| example.intents == *i)
            {
                example.uses += 1;
                example.passes += 1;
            }
        } else if outcome
            .intents
            .as_ref()
            .is_some_and(|i| example.intents == *i)
        {
            example.uses += 1;
        }
    }
    if outcome.passed {
        if let Some(intents) = &outcome.intents {
            let known = kb.few_shots.iter().any(|e| e.intents == *intents);
            if !known {
                kb.few_shots.push(FewShotExample {
                    case_title: outcome.case_title.clone(),
                    intents: intents.clone(),
                    uses: 1,
                    passes: 1,
                });
            }
        }
    }
    // pass-rate-weighted selection: best examples first
    kb.few_shots.sort_by(|a, b| {
        b.pass_rate()
            .partial_cmp(&a.pass_rate())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.uses.cmp(&a.uses))
    });
}
