//! Protocol-specific functional modeling with the focus-moving mechanism:
//! every prompt holds exactly one section in full, summaries of the module's
//! other sections as background, and the toolkit descriptors.

use serde::{Deserialize, Serialize};

use super::points::{PointOrigin, TestingPoint};
use super::{render_template, ModelingError, ModelingOptions, Toolkit};
use crate::analysis::{ProtocolModule, SummarySet};
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecificModel {
    pub module_name: String,
    pub points: Vec<TestingPoint>,
    /// Tool names requested by the model that are not in the registry; the
    /// requests are kept on the points, these are surfaced as warnings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_tools: Vec<String>,
}

fn points_schema() -> Schema {
    Schema::object(vec![FieldSchema::required(
        "points",
        Schema::array(Schema::object(vec![
            FieldSchema::required("title", Schema::non_empty_string()),
            FieldSchema::required("objective", Schema::non_empty_string()),
            FieldSchema::optional("parameters", Schema::StringMap),
            FieldSchema::optional("reference_sections", Schema::array(Schema::string())),
            FieldSchema::optional("additional_tools_required", Schema::array(Schema::string())),
        ])),
    )])
}

/// Models one protocol-specific module. Unknown tool requests are downgraded
/// to warnings with the tool list preserved on the point.
pub fn model_protocol_specific(
    module: &ProtocolModule,
    tree: &SpecTree,
    summaries: &SummarySet,
    toolkit: &Toolkit,
    gateway: &Gateway,
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    opts: &ModelingOptions,
) -> Result<SpecificModel, ModelingError> {
    let schema = points_schema();
    let mut model = SpecificModel {
        module_name: module.module_name.clone(),
        points: Vec::new(),
        unknown_tools: Vec::new(),
    };
    let sections: Vec<&String> = module
        .section_numbers
        .iter()
        .filter(|n| tree.contains(n))
        .collect();
    for number in &sections {
        let node = tree.get(number).expect("checked");
        if !node.has_content() {
            continue;
        }
        let other_summaries = sections
            .iter()
            .filter(|n| *n != number)
            .filter_map(|n| summaries.get(n))
            .map(|s| format!("{}: {}", s.section_number, s.summary))
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = render_template(
            templates,
            "model_specific",
            &[
                ("protocol_summary", tree.metadata.abstract_text.clone()),
                ("module_name", module.module_name.clone()),
                ("module_description", module.description.clone()),
                ("section_number", node.number.clone()),
                ("section_title", node.title.clone()),
                ("section_content", node.content.clone()),
                (
                    "other_summaries",
                    if other_summaries.is_empty() {
                        "(none)".to_string()
                    } else {
                        other_summaries
                    },
                ),
                ("toolkit", toolkit.describe()),
            ],
        )
        .map_err(|e| ModelingError::Section {
            module: module.module_name.clone(),
            section: (*number).clone(),
            source: e,
        })?;
        let completed = gateway
            .complete_structured(&prompt, &schema, opts.max_repairs)
            .map_err(|e| ModelingError::Section {
                module: module.module_name.clone(),
                section: (*number).clone(),
                source: e,
            })?;
        for v in completed.value["points"].as_array().into_iter().flatten() {
            let mut reference_sections: Vec<String> = v["reference_sections"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|s| s.as_str())
                .filter(|s| tree.contains(s))
                .map(|s| s.to_string())
                .collect();
            if reference_sections.is_empty() {
                reference_sections.push((*number).clone());
            }
            let tools: Vec<String> = v["additional_tools_required"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|s| s.as_str())
                .map(|s| s.to_string())
                .collect();
            for tool in &tools {
                if !toolkit.contains(tool) && !model.unknown_tools.contains(tool) {
                    model.unknown_tools.push(tool.clone());
                }
            }
            let parameters = v["parameters"]
                .as_object()
                .map(|m| {
                    m.iter()
                        .map(|(k, v)| {
                            let value = v
                                .as_str()
                                .map(|s| s.to_string())
                                .unwrap_or_else(|| v.to_string());
                            (k.clone(), value)
                        })
                        .collect()
                })
                .unwrap_or_default();
            model.points.push(TestingPoint {
                title: v["title"].as_str().unwrap_or_default().to_string(),
                objective: v["objective"].as_str().unwrap_or_default().to_string(),
                parameters,
                reference_sections,
                origin: PointOrigin::ProtocolSpecific,
                additional_tools_required: tools,
            });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{AgentKind, Classification, SectionSummary};
    use crate::gateway::Gateway;
    use crate::testkit::{fixture_tree, ClosureBackend};

    fn module(sections: &[&str]) -> ProtocolModule {
        ProtocolModule {
            module_name: "behavior".into(),
            description: "protocol-unique logic".into(),
            assigned_agent: AgentKind::ProtocolSpecific,
            section_numbers: sections.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn summaries(numbers: &[&str]) -> SummarySet {
        SummarySet {
            summaries: numbers
                .iter()
                .map(|n| SectionSummary {
                    section_number: n.to_string(),
                    summary: format!("summary {n}"),
                    references: Vec::new(),
                    unresolved_references: Vec::new(),
                    classification: Classification::Functional,
                    test_importance: 50,
                    empty_body: false,
                })
                .collect(),
        }
    }

    #[test]
    fn focus_moving_prompt_shape() {
        // 4 sections -> 4 prompts, each with exactly one full-content block
        // and 3 summaries
        let numbers = ["1", "2", "3", "4"];
        let tree = fixture_tree(&numbers);
        let prompts = std::sync::Arc::new(std::sync::Mutex::new(Vec::<String>::new()));
        let seen = prompts.clone();
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(move |prompt: &str| {
            seen.lock().unwrap().push(prompt.to_string());
            r#"{"points": [{"title": "t", "objective": "o", "parameters": {}, "reference_sections": [], "additional_tools_required": []}]}"#
                .to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let model = model_protocol_specific(
            &module(&numbers),
            &tree,
            &summaries(&numbers),
            &Toolkit::default(),
            &gw,
            &templates,
            &ModelingOptions::default(),
        )
        .unwrap();
        assert_eq!(model.points.len(), 4);
        let prompts = prompts.lock().unwrap();
        assert_eq!(prompts.len(), 4);
        for (i, prompt) in prompts.iter().enumerate() {
            let full_blocks = prompt.matches("Content of section").count();
            assert_eq!(
                full_blocks, 1,
                "prompt {i} must hold exactly one full section"
            );
            let summary_lines = prompt.matches("summary ").count();
            assert_eq!(
                summary_lines, 3,
                "prompt {i} must hold the other 3 summaries"
            );
        }
    }

    #[test]
    fn registered_tool_accepted_unknown_warned() {
        let tree = fixture_tree(&["1"]);
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|_| {
            r#"{"points": [
                {"title": "solver point", "objective": "o", "reference_sections": ["1"], "additional_tools_required": ["zen-solver"]},
                {"title": "novel tool", "objective": "o", "reference_sections": ["1"], "additional_tools_required": ["packet-wand"]}
            ]}"#
            .to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let model = model_protocol_specific(
            &module(&["1"]),
            &tree,
            &summaries(&["1"]),
            &Toolkit::default(),
            &gw,
            &templates,
            &ModelingOptions::default(),
        )
        .unwrap();
        assert_eq!(
            model.points[0].additional_tools_required,
            vec!["zen-solver"]
        );
        assert_eq!(
            model.points[1].additional_tools_required,
            vec!["packet-wand"],
            "unknown tool preserved on the point"
        );
        assert_eq!(model.unknown_tools, vec!["packet-wand"]);
    }
}
