//! Packet-field modeling: reorder sections header to body, then incrementally
//! traverse them, carrying previously extracted fields in every prompt.

use serde::{Deserialize, Serialize};

use super::{render_template, section_block, ModelingError, ModelingOptions};
use crate::analysis::ProtocolModule;
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldPosition {
    Bits { offset_bits: u32, width_bits: u32 },
    Symbolic(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub field_name: String,
    pub position: FieldPosition,
    pub value_constraints: String,
    pub expected_response: String,
    pub source_sections: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketModel {
    pub module_name: String,
    pub fields: Vec<FieldSpec>,
    /// Sections whose modeling round produced no fields, kept for review.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub empty_response_sections: Vec<String>,
}

fn fields_schema() -> Schema {
    Schema::object(vec![FieldSchema::required(
        "fields",
        Schema::array(Schema::object(vec![
            FieldSchema::required("field_name", Schema::non_empty_string()),
            FieldSchema::optional("offset_bits", Schema::int(0, i64::MAX)),
            FieldSchema::optional("width_bits", Schema::int(1, i64::MAX)),
            FieldSchema::optional("position", Schema::string()),
            FieldSchema::required("value_constraints", Schema::string()),
            FieldSchema::required("expected_response", Schema::string()),
            FieldSchema::optional("source_sections", Schema::array(Schema::string())),
        ])),
    )])
}

/// Sections whose titles carry layout keywords first, then document order.
/// The sort is stable so equal-priority sections keep their relative order.
pub(crate) fn reorder_header_first<'a>(
    module: &'a ProtocolModule,
    tree: &SpecTree,
    keywords: &[String],
) -> Vec<&'a str> {
    let mut numbers: Vec<&str> = module
        .section_numbers
        .iter()
        .map(|s| s.as_str())
        .filter(|s| tree.contains(s))
        .collect();
    numbers.sort_by_key(|n| {
        let title = tree
            .get(n)
            .map(|node| node.title.to_lowercase())
            .unwrap_or_default();
        let is_header = keywords.iter().any(|k| title.contains(k.as_str()));
        usize::from(!is_header)
    });
    numbers
}

fn render_fields(fields: &[FieldSpec]) -> String {
    if fields.is_empty() {
        return "(none yet)".to_string();
    }
    fields
        .iter()
        .map(|f| {
            let pos = match &f.position {
                FieldPosition::Bits {
                    offset_bits,
                    width_bits,
                } => format!("bits {offset_bits}+{width_bits}"),
                FieldPosition::Symbolic(s) => s.clone(),
            };
            format!("- {} ({pos}): {}", f.field_name, f.value_constraints)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_field(v: &serde_json::Value, fallback_section: &str) -> FieldSpec {
    let position = match (v["offset_bits"].as_i64(), v["width_bits"].as_i64()) {
        (Some(offset), Some(width)) if width > 0 => FieldPosition::Bits {
            offset_bits: offset.max(0) as u32,
            width_bits: width as u32,
        },
        _ => FieldPosition::Symbolic(
            v["position"]
                .as_str()
                .filter(|s| !s.trim().is_empty())
                .unwrap_or("unspecified")
                .to_string(),
        ),
    };
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
    FieldSpec {
        field_name: v["field_name"].as_str().unwrap_or_default().to_string(),
        position,
        value_constraints: v["value_constraints"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
        expected_response: v["expected_response"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
        source_sections,
    }
}

/// Models one packet-field module. Each round consumes one section and the
/// prompt carries everything extracted so far; the traversal ends when every
/// module section has been consumed.
pub fn model_fields(
    module: &ProtocolModule,
    tree: &SpecTree,
    gateway: &Gateway,
    templates: &std::collections::BTreeMap<String, PromptTemplate>,
    opts: &ModelingOptions,
) -> Result<PacketModel, ModelingError> {
    let schema = fields_schema();
    let ordered = reorder_header_first(module, tree, &opts.reorder_keywords);
    let mut model = PacketModel {
        module_name: module.module_name.clone(),
        fields: Vec::new(),
        empty_response_sections: Vec::new(),
    };
    for number in ordered {
        let node = tree.get(number).expect("filtered to existing sections");
        if !node.has_content() {
            continue;
        }
        let prompt = render_template(
            templates,
            "model_fields",
            &[
                ("protocol_summary", tree.metadata.abstract_text.clone()),
                ("module_name", module.module_name.clone()),
                ("module_description", module.description.clone()),
                ("section_content", section_block(tree, number)),
                ("previous_fields", render_fields(&model.fields)),
            ],
        )
        .map_err(|e| ModelingError::Section {
            module: module.module_name.clone(),
            section: number.to_string(),
            source: e,
        })?;
        let completed = gateway
            .complete_structured(&prompt, &schema, opts.max_repairs)
            .map_err(|e| ModelingError::Section {
                module: module.module_name.clone(),
                section: number.to_string(),
                source: e,
            })?;
        let new_fields: Vec<FieldSpec> = completed.value["fields"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|v| parse_field(v, number))
            .filter(|f| !f.field_name.is_empty())
            .collect();
        if new_fields.is_empty() {
            model.empty_response_sections.push(number.to_string());
        }
        for field in new_fields {
            if !model
                .fields
                .iter()
                .any(|f| f.field_name == field.field_name)
            {
                model.fields.push(field);
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AgentKind;
    use crate::gateway::Gateway;
    use crate::testkit::{fixture_tree, ClosureBackend};

    fn module(sections: &[&str]) -> ProtocolModule {
        ProtocolModule {
            module_name: "packet".into(),
            description: "packet layout".into(),
            assigned_agent: AgentKind::PacketField,
            section_numbers: sections.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn two_sections_four_fields_with_carryover() {
        let tree = fixture_tree(&["1", "2"]);
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|prompt: &str| {
            if prompt.contains("Section 1 ") {
                r#"{"fields": [
                    {"field_name": "version", "offset_bits": 0, "width_bits": 8, "value_constraints": "must be 2", "expected_response": "discard otherwise"},
                    {"field_name": "command", "offset_bits": 8, "width_bits": 8, "value_constraints": "1 or 2", "expected_response": "ignore otherwise"}
                ]}"#.to_string()
            } else if prompt.contains("- version") && prompt.contains("- command") {
                // round 2 sees round-1 fields in its prompt
                r#"{"fields": [
                    {"field_name": "metric", "position": "entry word 5", "value_constraints": "1..16", "expected_response": "treat 16 as unreachable"},
                    {"field_name": "route_tag", "position": "entry word 2", "value_constraints": "opaque", "expected_response": "preserved"}
                ]}"#.to_string()
            } else {
                r#"{"fields": []}"#.to_string()
            }
        })));
        let templates = crate::datafiles::default_templates();
        let model = model_fields(
            &module(&["1", "2"]),
            &tree,
            &gw,
            &templates,
            &ModelingOptions::default(),
        )
        .unwrap();
        assert_eq!(
            model.fields.len(),
            4,
            "round 2 prompt must contain round 1 fields"
        );
        assert_eq!(
            model.fields[0].position,
            FieldPosition::Bits {
                offset_bits: 0,
                width_bits: 8
            }
        );
        assert_eq!(
            model.fields[2].source_sections,
            vec!["2"],
            "fallback source section"
        );
    }

    #[test]
    fn empty_response_is_flagged() {
        let tree = fixture_tree(&["1"]);
        let gw = Gateway::with_backend(Box::new(ClosureBackend::new(|_| {
            r#"{"fields": []}"#.to_string()
        })));
        let templates = crate::datafiles::default_templates();
        let model = model_fields(
            &module(&["1"]),
            &tree,
            &gw,
            &templates,
            &ModelingOptions::default(),
        )
        .unwrap();
        assert!(model.fields.is_empty());
        assert_eq!(model.empty_response_sections, vec!["1"]);
    }

    #[test]
    fn header_sections_come_first() {
        let tree = {
            // build a fixture where section 2 is the format section
            use crate::ingest::{ingest_document, IngestRules, RawSpecDocument};
            let text = "\
Request for Comments: 9999

                    Fixture

Status of this Memo

   Synthetic.

Abstract

   Synthetic.

Table of Contents

   1.  Overview . . . . . . . . . . . . . . . . . . . . . . . . . .  2
   2.  Message Format . . . . . . . . . . . . . . . . . . . . . . .  2

1.  Overview

   Prose.

2.  Message Format

   Layout.
";
            ingest_document(&RawSpecDocument::new("t", text), &IngestRules::default()).unwrap()
        };
        let m = module(&["1", "2"]);
        let ordered = reorder_header_first(&m, &tree, &ModelingOptions::default().reorder_keywords);
        assert_eq!(ordered, vec!["2", "1"]);
    }
}
