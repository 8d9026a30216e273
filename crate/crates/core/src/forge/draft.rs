//! Intent orchestration and artifact drafting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kb::{FewShotExample, TaskKnowledgeBase};
use super::retrieve::RetrievedEntry;
use super::ForgeError;
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::testcase::TestCase;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineGrainedIntent {
    pub script_intents: Vec<String>,
    pub config_intents: Vec<String>,
    pub topology_intents: Vec<String>,
}

impl FineGrainedIntent {
    pub fn is_empty(&self) -> bool {
        self.script_intents.is_empty()
            && self.config_intents.is_empty()
            && self.topology_intents.is_empty()
    }
}

/// Tester script plus DUT configuration for one case. The script is one API
/// call per line with `expect` assertion steps; the configuration is one CLI
/// command per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutableArtifact {
    pub case_id: String,
    pub tester_script: String,
    pub dut_config: String,
}

fn intents_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("script_intents", Schema::array(Schema::string())),
        FieldSchema::required("config_intents", Schema::array(Schema::string())),
        FieldSchema::required("topology_intents", Schema::array(Schema::string())),
    ])
}

fn artifact_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("tester_script", Schema::non_empty_string()),
        FieldSchema::required("dut_config", Schema::non_empty_string()),
    ])
}

fn render_case(case: &TestCase) -> String {
    serde_json::to_string_pretty(case).unwrap_or_default()
}

fn render_few_shot_examples(examples: &[FewShotExample]) -> String {
    if examples.is_empty() {
        return "(none)".to_string();
    }
    examples
        .iter()
        .take(3)
        .map(|e| {
            format!(
                "Case: {}\nIntents: {}",
                e.case_title,
                serde_json::to_string(&e.intents).unwrap_or_default()
            )
        })
        .collect::<Vec<_>>()
        .join("\n---\n")
}

/// Orchestrator sub-agent: decomposes a test case into fine-grained script,
/// config, and topology intents. Empty-step cases are rejected before
/// prompting.
pub fn orchestrate(
    case: &TestCase,
    few_shots: &[FewShotExample],
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<FineGrainedIntent, ForgeError> {
    if case.steps.iter().all(|s| s.trim().is_empty()) || case.steps.is_empty() {
        return Err(ForgeError::InvalidCase(format!(
            "case {} has no steps to orchestrate",
            case.case_id
        )));
    }
    let template = templates.get("orchestrate").expect("template registered");
    let mut bindings = BTreeMap::new();
    bindings.insert("few_shots".to_string(), render_few_shot_examples(few_shots));
    bindings.insert("case".to_string(), render_case(case));
    let prompt = template.render(&bindings)?;
    let completed = gateway.complete_structured(&prompt, &intents_schema(), max_repairs)?;
    let collect = |key: &str| -> Vec<String> {
        completed.value[key]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s.as_str())
            .map(|s| s.to_string())
            .collect()
    };
    let intent = FineGrainedIntent {
        script_intents: collect("script_intents"),
        config_intents: collect("config_intents"),
        topology_intents: collect("topology_intents"),
    };
    if intent.is_empty() {
        return Err(ForgeError::InvalidCase(format!(
            "orchestration produced no intents for case {}",
            case.case_id
        )));
    }
    Ok(intent)
}

/// Core generation agent: one draft round. The prompt carries the task
/// knowledge base (task info, heuristics, SOPs), the intents, retrieved
/// knowledge entries, and correction hints from previous rounds.
#[allow(clippy::too_many_arguments)]
pub fn draft_artifact(
    case: &TestCase,
    intents: &FineGrainedIntent,
    kb: &TaskKnowledgeBase,
    retrieved: &[RetrievedEntry],
    hints: &[String],
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<ExecutableArtifact, ForgeError> {
    let template = templates
        .get("draft_artifact")
        .expect("template registered");
    let retrieved_text = if retrieved.is_empty() {
        "(none)".to_string()
    } else {
        retrieved
            .iter()
            .map(|r| format!("- {} (via {})", r.payload_ref, r.path.join(" / ")))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let hints_text = if hints.is_empty() {
        "(none)".to_string()
    } else {
        hints
            .iter()
            .map(|h| format!("- {h}"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut bindings = BTreeMap::new();
    bindings.insert(
        "task_description".to_string(),
        kb.task_info.task_description.clone(),
    );
    bindings.insert("case".to_string(), render_case(case));
    bindings.insert(
        "intents".to_string(),
        serde_json::to_string_pretty(intents).unwrap_or_default(),
    );
    bindings.insert(
        "repository_structure".to_string(),
        kb.task_info.repository_structure.clone(),
    );
    bindings.insert(
        "device_inventory".to_string(),
        kb.task_info.device_inventory.join(", "),
    );
    bindings.insert("retrieved".to_string(), retrieved_text);
    bindings.insert("heuristics".to_string(), kb.expert_heuristics.join("\n"));
    bindings.insert("sops".to_string(), {
        kb.sops
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {}", i + 1, s))
            .collect::<Vec<_>>()
            .join("\n")
    });
    bindings.insert("hints".to_string(), hints_text);
    let prompt = template.render(&bindings)?;
    let completed = gateway.complete_structured(&prompt, &artifact_schema(), max_repairs)?;
    Ok(ExecutableArtifact {
        case_id: case.case_id.clone(),
        tester_script: completed.value["tester_script"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
        dut_config: completed.value["dut_config"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::ClosureBackend;

    fn case(id: &str, steps: &[&str]) -> TestCase {
        TestCase {
            case_id: id.to_string(),
            title: "t".into(),
            objective: "o".into(),
            steps: steps.iter().map(|s| s.to_string()).collect(),
            expected_results: vec!["r".into()],
            reference_sections: vec!["1".into()],
            topology: "tester <-> dut".into(),
            parameters: BTreeMap::new(),
        }
    }

    #[test]
    fn orchestrate_partitions_intents() {
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|_| {
            r#"{"script_intents": ["reserve a port", "send updates", "check the route"],
                "config_intents": ["address the interface", "enable the protocol"],
                "topology_intents": ["connect p1 to eth0"]}"#
                .to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let intents = orchestrate(&case("TC-1", &["step"]), &[], &gw, &templates, 3).unwrap();
        assert_eq!(intents.script_intents.len(), 3);
        assert_eq!(intents.config_intents.len(), 2);
        assert_eq!(intents.topology_intents.len(), 1);
    }

    #[test]
    fn empty_steps_rejected_before_prompting() {
        let gw =
            Gateway::with_backend(Box::new(ClosureBackend::new(|_| panic!("must not prompt"))));
        let templates = crate::datafiles::default_templates();
        let err = orchestrate(&case("TC-1", &[]), &[], &gw, &templates, 3).unwrap_err();
        assert!(matches!(err, ForgeError::InvalidCase(_)));
        assert_eq!(gw.call_count(), 0);
    }

    #[test]
    fn draft_returns_both_artifacts() {
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|prompt: &str| {
            assert!(prompt.contains("Standard operating procedure"));
            r#"{"tester_script": "reserve_port p1\nexpect ok\n", "dut_config": "hostname dut1\n"}"#
                .to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let kb = TaskKnowledgeBase::minimal_for_tests();
        let artifact = draft_artifact(
            &case("TC-1", &["step"]),
            &FineGrainedIntent::default(),
            &kb,
            &[],
            &[],
            &gw,
            &templates,
            3,
        )
        .unwrap();
        assert!(artifact.tester_script.contains("reserve_port"));
        assert!(artifact.dut_config.contains("hostname"));
        assert_eq!(artifact.case_id, "TC-1");
    }

    #[test]
    fn draft_prompt_carries_hints() {
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|prompt: &str| {
            assert!(prompt.contains("- fix the spelling of ip address"));
            r#"{"tester_script": "s", "dut_config": "c"}"#.to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let kb = TaskKnowledgeBase::minimal_for_tests();
        draft_artifact(
            &case("TC-1", &["step"]),
            &FineGrainedIntent::default(),
            &kb,
            &[],
            &["fix the spelling of ip address".to_string()],
            &gw,
            &templates,
            3,
        )
        .unwrap();
    }
}
