//! Test case generation from testing points.

use std::collections::BTreeMap;

use super::{CaseError, CaseWarning, TestCase};
use crate::analysis::SummarySet;
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;
use crate::modeling::TestingPoint;

/// Context the generation prompt carries beyond the point itself.
pub struct GenerationContext<'a> {
    pub tree: &'a SpecTree,
    pub summaries: &'a SummarySet,
    /// (module_name, module_description) the point's module came from.
    pub module: (String, String),
    pub few_shots: &'a [TestCase],
    pub max_repairs: u32,
}

pub fn case_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("title", Schema::non_empty_string()),
        FieldSchema::required("objective", Schema::non_empty_string()),
        FieldSchema::required("steps", Schema::non_empty_array(Schema::non_empty_string())),
        FieldSchema::required(
            "expected_results",
            Schema::non_empty_array(Schema::non_empty_string()),
        ),
        FieldSchema::required("reference_sections", Schema::array(Schema::string())),
        FieldSchema::required("topology", Schema::non_empty_string()),
        FieldSchema::optional("parameters", Schema::StringMap),
    ])
}

pub(crate) fn render_few_shots(few_shots: &[TestCase]) -> String {
    if few_shots.is_empty() {
        return "(none)".to_string();
    }
    few_shots
        .iter()
        .map(|c| serde_json::to_string_pretty(c).unwrap_or_default())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Builds a `TestCase` from a validated model reply. Reference sections are
/// checked against the tree; the required set is unioned back in when the
/// model drops any of it.
pub fn case_from_value(
    value: &serde_json::Value,
    case_id: &str,
    required_sections: &[String],
    tree: &SpecTree,
) -> (TestCase, Vec<CaseWarning>) {
    let mut warnings = Vec::new();
    let mut reference_sections: Vec<String> = Vec::new();
    let mut dropped = Vec::new();
    for r in value["reference_sections"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|s| s.as_str())
    {
        if tree.contains(r) {
            if !reference_sections.contains(&r.to_string()) {
                reference_sections.push(r.to_string());
            }
        } else {
            dropped.push(r.to_string());
        }
    }
    if !dropped.is_empty() {
        warnings.push(CaseWarning::UnresolvedReferences {
            case_id: case_id.to_string(),
            dropped,
        });
    }
    let mut drifted = false;
    for required in required_sections {
        if !reference_sections.contains(required) {
            reference_sections.push(required.clone());
            drifted = true;
        }
    }
    if drifted {
        warnings.push(CaseWarning::ReferenceDrift {
            case_id: case_id.to_string(),
        });
    }
    let parameters: BTreeMap<String, String> = value["parameters"]
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
    let collect_strings = |key: &str| -> Vec<String> {
        value[key]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s.as_str())
            .map(|s| s.to_string())
            .collect()
    };
    (
        TestCase {
            case_id: case_id.to_string(),
            title: value["title"].as_str().unwrap_or_default().to_string(),
            objective: value["objective"].as_str().unwrap_or_default().to_string(),
            steps: collect_strings("steps"),
            expected_results: collect_strings("expected_results"),
            reference_sections,
            topology: value["topology"].as_str().unwrap_or_default().to_string(),
            parameters,
        },
        warnings,
    )
}

/// Generates one test case from a testing point.
pub fn generate_case(
    point: &TestingPoint,
    ctx: &GenerationContext<'_>,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    case_id: &str,
) -> Result<(TestCase, Vec<CaseWarning>), CaseError> {
    if point.objective.trim().is_empty() {
        return Err(CaseError::InvalidPoint(format!(
            "point `{}` has an empty objective",
            point.title
        )));
    }
    if point.reference_sections.is_empty() {
        return Err(CaseError::InvalidPoint(format!(
            "point `{}` has no reference sections",
            point.title
        )));
    }
    let referenced_content = point
        .reference_sections
        .iter()
        .filter_map(|n| ctx.tree.get(n))
        .map(|node| {
            format!(
                "Section {} ({}):\n{}",
                node.number, node.title, node.content
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    let relevant_summaries = point
        .reference_sections
        .iter()
        .filter_map(|n| ctx.summaries.get(n))
        .map(|s| format!("{}: {}", s.section_number, s.summary))
        .collect::<Vec<_>>()
        .join("\n");
    let parameters = if point.parameters.is_empty() {
        "(none)".to_string()
    } else {
        point
            .parameters
            .iter()
            .map(|(k, v)| format!("- {k}: {v}"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let template = templates.get("generate_case").expect("template registered");
    let mut bindings = BTreeMap::new();
    bindings.insert(
        "protocol_summary".to_string(),
        ctx.tree.metadata.abstract_text.clone(),
    );
    bindings.insert("module_name".to_string(), ctx.module.0.clone());
    bindings.insert("module_description".to_string(), ctx.module.1.clone());
    bindings.insert("point_title".to_string(), point.title.clone());
    bindings.insert("point_objective".to_string(), point.objective.clone());
    bindings.insert(
        "point_origin".to_string(),
        point.origin.as_str().to_string(),
    );
    bindings.insert("point_parameters".to_string(), parameters);
    bindings.insert(
        "point_references".to_string(),
        point.reference_sections.join(", "),
    );
    bindings.insert("referenced_content".to_string(), referenced_content);
    bindings.insert("relevant_summaries".to_string(), relevant_summaries);
    bindings.insert("few_shots".to_string(), render_few_shots(ctx.few_shots));
    let prompt = template.render(&bindings)?;
    let completed = gateway.complete_structured(&prompt, &case_schema(), ctx.max_repairs)?;
    Ok(case_from_value(
        &completed.value,
        case_id,
        &point.reference_sections,
        ctx.tree,
    ))
}

/// Generates a case per point with sequential, deterministic case ids
/// (`TC-<origin>-<n>`).
pub fn generate_cases(
    points: &[(TestingPoint, (String, String))],
    tree: &SpecTree,
    summaries: &SummarySet,
    few_shots: &[TestCase],
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<(Vec<TestCase>, Vec<CaseWarning>), CaseError> {
    let mut cases = Vec::new();
    let mut warnings = Vec::new();
    let mut counters: BTreeMap<&'static str, u32> = BTreeMap::new();
    for (point, module) in points {
        let counter = counters.entry(point.origin.tag()).or_insert(0);
        *counter += 1;
        let case_id = format!("TC-{}-{:04}", point.origin.tag(), counter);
        let ctx = GenerationContext {
            tree,
            summaries,
            module: module.clone(),
            few_shots,
            max_repairs,
        };
        let (case, mut case_warnings) = generate_case(point, &ctx, gateway, templates, &case_id)?;
        cases.push(case);
        warnings.append(&mut case_warnings);
    }
    Ok((cases, warnings))
}
