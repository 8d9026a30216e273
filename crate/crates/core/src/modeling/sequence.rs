//! Message time-sequence modeling: the same incremental traversal as field
//! modeling, capturing inter-device ordering and expected responses.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{render_template, section_block, ModelingError, ModelingOptions};
use crate::analysis::ProtocolModule;
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageStep {
    pub step_id: String,
    pub sender_role: String,
    pub receiver_role: String,
    pub message_type: String,
    /// Ids of steps that must precede this one.
    pub ordering_constraints: Vec<String>,
    pub expected_response: String,
    pub source_sections: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceModel {
    pub module_name: String,
    /// Steps in an order consistent with every ordering constraint.
    pub steps: Vec<MessageStep>,
}

fn sequence_schema() -> Schema {
    Schema::object(vec![FieldSchema::required(
        "steps",
        Schema::array(Schema::object(vec![
            FieldSchema::required("step_id", Schema::non_empty_string()),
            FieldSchema::required("sender_role", Schema::non_empty_string()),
            FieldSchema::required("receiver_role", Schema::non_empty_string()),
            FieldSchema::required("message_type", Schema::non_empty_string()),
            FieldSchema::optional("ordering_constraints", Schema::array(Schema::string())),
            FieldSchema::required("expected_response", Schema::string()),
            FieldSchema::optional("source_sections", Schema::array(Schema::string())),
        ])),
    )])
}

fn parse_step(v: &serde_json::Value, fallback_section: &str) -> MessageStep {
    let ordering_constraints = v["ordering_constraints"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|s| s.as_str())
        .map(|s| s.to_string())
        .collect();
    let mut source_sections: Vec<String> = v["source_sections"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|s| s.as_str())
        .map(|s| s.to_string())
        .collect();
    if source_sections.is_empty() {
        source_sections.push(fallback_section.to_string());
    }
    MessageStep {
        step_id: v["step_id"].as_str().unwrap_or_default().to_string(),
        sender_role: v["sender_role"].as_str().unwrap_or_default().to_string(),
        receiver_role: v["receiver_role"].as_str().unwrap_or_default().to_string(),
        message_type: v["message_type"].as_str().unwrap_or_default().to_string(),
        ordering_constraints,
        expected_response: v["expected_response"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
        source_sections,
    }
}

/// Orders steps topologically under their constraints, keeping the model's
/// original order among unconstrained peers. Unknown constraint ids are
/// ignored. A cycle yields `CyclicOrdering`.
pub(crate) fn topological_order(
    steps: Vec<MessageStep>,
) -> Result<Vec<MessageStep>, ModelingError> {
    let known: BTreeSet<String> = steps.iter().map(|s| s.step_id.clone()).collect();
    let mut remaining = steps;
    let mut placed: Vec<MessageStep> = Vec::new();
    let mut placed_ids: BTreeSet<String> = BTreeSet::new();
    while !remaining.is_empty() {
        let ready = remaining.iter().position(|step| {
            step.ordering_constraints
                .iter()
                .filter(|c| known.contains(*c))
                .all(|c| placed_ids.contains(c))
        });
        match ready {
            Some(idx) => {
                let step = remaining.remove(idx);
                placed_ids.insert(step.step_id.clone());
                placed.push(step);
            }
            None => {
                let stuck = remaining[0].step_id.clone();
                return Err(ModelingError::CyclicOrdering(stuck));
            }
        }
    }
    Ok(placed)
}

fn render_steps(steps: &[MessageStep]) -> String {
    if steps.is_empty() {
        return "(none yet)".to_string();
    }
    steps
        .iter()
        .map(|s| {
            format!(
                "- {}: {} -> {} [{}] after {:?}",
                s.step_id, s.sender_role, s.receiver_role, s.message_type, s.ordering_constraints
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Models one time-sequence module section by section.
pub fn model_sequence(
    module: &ProtocolModule,
    tree: &SpecTree,
    gateway: &Gateway,
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    opts: &ModelingOptions,
) -> Result<SequenceModel, ModelingError> {
    let schema = sequence_schema();
    let mut steps: Vec<MessageStep> = Vec::new();
    for number in module.section_numbers.iter().filter(|n| tree.contains(n)) {
        let node = tree.get(number).expect("checked");
        if !node.has_content() {
            continue;
        }
        let prompt = render_template(
            templates,
            "model_sequence",
            &[
                ("protocol_summary", tree.metadata.abstract_text.clone()),
                ("module_name", module.module_name.clone()),
                ("module_description", module.description.clone()),
                ("section_content", section_block(tree, number)),
                ("previous_steps", render_steps(&steps)),
            ],
        )
        .map_err(|e| ModelingError::Section {
            module: module.module_name.clone(),
            section: number.clone(),
            source: e,
        })?;
        let completed = gateway
            .complete_structured(&prompt, &schema, opts.max_repairs)
            .map_err(|e| ModelingError::Section {
                module: module.module_name.clone(),
                section: number.clone(),
                source: e,
            })?;
        for v in completed.value["steps"].as_array().into_iter().flatten() {
            let step = parse_step(v, number);
            if !steps.iter().any(|s| s.step_id == step.step_id) {
                steps.push(step);
            }
        }
    }
    let ordered = topological_order(steps)?;
    Ok(SequenceModel {
        module_name: module.module_name.clone(),
        steps: ordered,
    })
}
