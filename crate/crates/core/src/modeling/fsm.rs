//! FSM modeling: a whole-module pass builds the foundational framework, then
//! a per-section traversal refines and supplements it, integrating
//! incrementally until every section has been examined.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{render_template, section_block, ModelingError, ModelingOptions};
use crate::analysis::ProtocolModule;
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmTransition {
    pub source: String,
    pub target: String,
    pub event: String,
    pub action: String,
    pub constraints: Vec<String>,
    pub source_sections: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FsmModel {
    pub module_name: String,
    pub states: BTreeSet<String>,
    /// States promoted from transition endpoints that were never declared.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub inferred_states: BTreeSet<String>,
    pub transitions: Vec<FsmTransition>,
}

fn fsm_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("states", Schema::array(Schema::string())),
        FieldSchema::required(
            "transitions",
            Schema::array(Schema::object(vec![
                FieldSchema::required("source", Schema::non_empty_string()),
                FieldSchema::required("target", Schema::non_empty_string()),
                FieldSchema::required("event", Schema::non_empty_string()),
                FieldSchema::required("action", Schema::string()),
                FieldSchema::optional("constraints", Schema::array(Schema::string())),
                FieldSchema::optional("source_sections", Schema::array(Schema::string())),
            ])),
        ),
    ])
}

fn parse_transition(v: &serde_json::Value, fallback_section: &str) -> FsmTransition {
    let constraints = v["constraints"]
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
    FsmTransition {
        source: v["source"].as_str().unwrap_or_default().to_string(),
        target: v["target"].as_str().unwrap_or_default().to_string(),
        event: v["event"].as_str().unwrap_or_default().to_string(),
        action: v["action"].as_str().unwrap_or_default().to_string(),
        constraints,
        source_sections,
    }
}

/// Merges new transitions into the model. Duplicates (same source, event,
/// target) are integrated by unioning constraints and source sections, so
/// repeated integration rounds are idempotent.
fn integrate(model: &mut FsmModel, states: Vec<String>, transitions: Vec<FsmTransition>) {
    for s in states {
        if !s.trim().is_empty() {
            model.states.insert(s);
        }
    }
    for t in transitions {
        if t.source.is_empty() || t.target.is_empty() {
            continue;
        }
        match model.transitions.iter_mut().find(|existing| {
            existing.source == t.source && existing.event == t.event && existing.target == t.target
        }) {
            Some(existing) => {
                for c in t.constraints {
                    if !existing.constraints.contains(&c) {
                        existing.constraints.push(c);
                    }
                }
                for s in t.source_sections {
                    if !existing.source_sections.contains(&s) {
                        existing.source_sections.push(s);
                    }
                }
                if existing.action.is_empty() {
                    existing.action = t.action;
                }
            }
            None => model.transitions.push(t),
        }
    }
}

fn render_fsm(model: &FsmModel) -> String {
    let states = model.states.iter().cloned().collect::<Vec<_>>().join(", ");
    let transitions = model
        .transitions
        .iter()
        .map(|t| {
            format!(
                "- {} --[{}]--> {} ({})",
                t.source, t.event, t.target, t.action
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    format!(
        "States: {}\nTransitions:\n{}",
        if states.is_empty() { "(none)" } else { &states },
        if transitions.is_empty() {
            "(none)"
        } else {
            &transitions
        }
    )
}

/// Models one FSM module with the four-step procedure: whole-module pass,
/// per-section traversal, per-section refinement, incremental integration.
pub fn model_fsm(
    module: &ProtocolModule,
    tree: &SpecTree,
    gateway: &Gateway,
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    opts: &ModelingOptions,
) -> Result<FsmModel, ModelingError> {
    let schema = fsm_schema();
    let mut model = FsmModel {
        module_name: module.module_name.clone(),
        states: BTreeSet::new(),
        inferred_states: BTreeSet::new(),
        transitions: Vec::new(),
    };

    // step 1: whole-module pass
    let module_content = module
        .section_numbers
        .iter()
        .filter(|n| tree.contains(n))
        .map(|n| section_block(tree, n))
        .collect::<Vec<_>>()
        .join("\n\n");
    let first_section = module.section_numbers.first().cloned().unwrap_or_default();
    let prompt = render_template(
        templates,
        "model_fsm_overview",
        &[
            ("protocol_summary", tree.metadata.abstract_text.clone()),
            ("module_name", module.module_name.clone()),
            ("module_description", module.description.clone()),
            ("module_content", module_content),
        ],
    )?;
    let completed = gateway.complete_structured(&prompt, &schema, opts.max_repairs)?;
    let states = completed.value["states"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|s| s.as_str())
        .map(|s| s.to_string())
        .collect();
    let transitions = completed.value["transitions"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|v| parse_transition(v, &first_section))
        .collect();
    integrate(&mut model, states, transitions);

    // steps 2-4: per-section refinement, integrated incrementally
    for number in module.section_numbers.iter().filter(|n| tree.contains(n)) {
        let node = tree.get(number).expect("checked");
        if !node.has_content() {
            continue;
        }
        let prompt = render_template(
            templates,
            "model_fsm_section",
            &[
                ("protocol_summary", tree.metadata.abstract_text.clone()),
                ("module_name", module.module_name.clone()),
                ("current_fsm", render_fsm(&model)),
                ("section_number", node.number.clone()),
                ("section_title", node.title.clone()),
                ("section_content", node.content.clone()),
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
        let states = completed.value["states"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s.as_str())
            .map(|s| s.to_string())
            .collect();
        let transitions = completed.value["transitions"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|v| parse_transition(v, number))
            .collect();
        integrate(&mut model, states, transitions);
    }

    // post-integration integrity: every endpoint must be a declared state
    for t in &model.transitions {
        for endpoint in [&t.source, &t.target] {
            if !model.states.contains(endpoint) {
                if opts.strict_fsm {
                    return Err(ModelingError::DanglingState(endpoint.clone()));
                }
                model.states.insert(endpoint.clone());
                model.inferred_states.insert(endpoint.clone());
            }
        }
    }
    Ok(model)
}
