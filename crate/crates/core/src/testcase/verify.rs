//! Coverage verification: breadth (key-section coverage by explicit reference)
//! and depth (LLM-judged basic/boundary scores), plus the refinement loop.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::generate::{case_from_value, case_schema, render_few_shots};
use super::{CaseError, CoverageConfig, TestCase};
use crate::gateway::{FieldSchema, Gateway, PromptTemplate, Schema};
use crate::ingest::SpecTree;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeySection {
    pub section_number: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreadthReport {
    pub key_sections: Vec<KeySection>,
    pub covered: BTreeSet<String>,
    pub coverage_rate: f64,
    /// Set when the key-section list was empty and the rate defaulted to 0.
    #[serde(default)]
    pub empty_key_set: bool,
}

impl BreadthReport {
    pub fn uncovered(&self) -> Vec<&str> {
        self.key_sections
            .iter()
            .map(|k| k.section_number.as_str())
            .filter(|n| !self.covered.contains(*n))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthEntry {
    pub basic_function_score: u8,
    pub boundary_case_score: u8,
    pub rationale: String,
    pub suggestions: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DepthReport {
    pub entries: BTreeMap<String, DepthEntry>,
}

impl DepthReport {
    pub fn meets_targets(&self, config: &CoverageConfig) -> bool {
        self.entries.values().all(|e| {
            f64::from(e.basic_function_score) >= config.basic_target
                && f64::from(e.boundary_case_score) >= config.boundary_target
        })
    }
}

/// A key section is covered iff at least one case lists it among its
/// reference sections.
pub fn compute_breadth(cases: &[TestCase], key_sections: &[(String, f64)]) -> BreadthReport {
    let mut covered = BTreeSet::new();
    let key_set: BTreeSet<&str> = key_sections.iter().map(|(n, _)| n.as_str()).collect();
    for case in cases {
        for section in &case.reference_sections {
            if key_set.contains(section.as_str()) {
                covered.insert(section.clone());
            }
        }
    }
    let coverage_rate = if key_sections.is_empty() {
        0.0
    } else {
        covered.len() as f64 / key_sections.len() as f64
    };
    BreadthReport {
        key_sections: key_sections
            .iter()
            .map(|(n, s)| KeySection {
                section_number: n.clone(),
                score: *s,
            })
            .collect(),
        covered,
        coverage_rate,
        empty_key_set: key_sections.is_empty(),
    }
}

fn depth_schema() -> Schema {
    Schema::object(vec![
        FieldSchema::required("basic_function_score", Schema::int(0, 100)),
        FieldSchema::required("boundary_case_score", Schema::int(0, 100)),
        FieldSchema::required("rationale", Schema::string()),
        FieldSchema::required("suggestions", Schema::array(Schema::string())),
    ])
}

/// Judges coverage depth for one section. A section with zero cases is not
/// sent to the judge: it scores 0/0 with a "no coverage" suggestion.
pub fn judge_depth(
    section_number: &str,
    tree: &SpecTree,
    cases_for_section: &[&TestCase],
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<DepthEntry, CaseError> {
    if cases_for_section.is_empty() {
        return Ok(DepthEntry {
            basic_function_score: 0,
            boundary_case_score: 0,
            rationale: "no test cases reference this section".to_string(),
            suggestions: vec!["no coverage".to_string()],
        });
    }
    let node = tree.get(section_number);
    let cases_text = cases_for_section
        .iter()
        .map(|c| {
            format!(
                "{} {}: steps: {} expected: {}",
                c.case_id,
                c.title,
                c.steps.join(" | "),
                c.expected_results.join(" | ")
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let template = templates.get("judge_depth").expect("template registered");
    let mut bindings = BTreeMap::new();
    bindings.insert("section_number".to_string(), section_number.to_string());
    bindings.insert(
        "section_title".to_string(),
        node.map(|n| n.title.clone()).unwrap_or_default(),
    );
    bindings.insert(
        "section_content".to_string(),
        node.map(|n| n.content.clone()).unwrap_or_default(),
    );
    bindings.insert("cases".to_string(), cases_text);
    let prompt = template.render(&bindings)?;
    let completed = gateway.complete_structured(&prompt, &depth_schema(), max_repairs)?;
    let v = completed.value;
    Ok(DepthEntry {
        basic_function_score: v["basic_function_score"]
            .as_i64()
            .unwrap_or(0)
            .clamp(0, 100) as u8,
        boundary_case_score: v["boundary_case_score"].as_i64().unwrap_or(0).clamp(0, 100) as u8,
        rationale: v["rationale"].as_str().unwrap_or_default().to_string(),
        suggestions: v["suggestions"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s.as_str())
            .map(|s| s.to_string())
            .collect(),
    })
}

/// Groups cases by key section (a case contributes to every section it
/// references) and judges each.
pub fn judge_depth_all(
    key_sections: &[(String, f64)],
    cases: &[TestCase],
    tree: &SpecTree,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<DepthReport, CaseError> {
    let mut report = DepthReport::default();
    for (number, _) in key_sections {
        let group: Vec<&TestCase> = cases
            .iter()
            .filter(|c| c.reference_sections.iter().any(|r| r == number))
            .collect();
        let entry = judge_depth(number, tree, &group, gateway, templates, max_repairs)?;
        report.entries.insert(number.clone(), entry);
    }
    Ok(report)
}

/// One refinement pass: supplementary cases for every uncovered key section
/// first, then depth-improvement cases for sections below target.
#[allow(clippy::too_many_arguments)]
pub fn refine(
    breadth: &BreadthReport,
    depth: &DepthReport,
    tree: &SpecTree,
    few_shots: &[TestCase],
    config: &CoverageConfig,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
    id_offsets: (&mut u32, &mut u32),
) -> Result<Vec<TestCase>, CaseError> {
    let (supplement_counter, depth_counter) = id_offsets;
    let mut new_cases = Vec::new();
    for number in breadth.uncovered() {
        let node = tree.get(number);
        let template = templates
            .get("refine_breadth")
            .expect("template registered");
        let mut bindings = BTreeMap::new();
        bindings.insert(
            "protocol_summary".to_string(),
            tree.metadata.abstract_text.clone(),
        );
        bindings.insert("section_number".to_string(), number.to_string());
        bindings.insert(
            "section_title".to_string(),
            node.map(|n| n.title.clone()).unwrap_or_default(),
        );
        bindings.insert(
            "section_content".to_string(),
            node.map(|n| n.content.clone()).unwrap_or_default(),
        );
        bindings.insert("few_shots".to_string(), render_few_shots(few_shots));
        let prompt = template.render(&bindings)?;
        let completed = gateway.complete_structured(&prompt, &case_schema(), max_repairs)?;
        *supplement_counter += 1;
        let case_id = format!("TC-SUP-{:04}", supplement_counter);
        let required = vec![number.to_string()];
        let (case, _) = case_from_value(&completed.value, &case_id, &required, tree);
        new_cases.push(case);
    }
    for (number, entry) in &depth.entries {
        let below_basic = f64::from(entry.basic_function_score) < config.basic_target;
        let below_boundary = f64::from(entry.boundary_case_score) < config.boundary_target;
        if !(below_basic || below_boundary) || entry.suggestions.is_empty() {
            continue;
        }
        if breadth.uncovered().contains(&number.as_str()) {
            // a supplement case was just generated for it
            continue;
        }
        let node = tree.get(number);
        let template = templates.get("refine_depth").expect("template registered");
        let mut bindings = BTreeMap::new();
        bindings.insert(
            "protocol_summary".to_string(),
            tree.metadata.abstract_text.clone(),
        );
        bindings.insert("section_number".to_string(), number.clone());
        bindings.insert(
            "section_title".to_string(),
            node.map(|n| n.title.clone()).unwrap_or_default(),
        );
        bindings.insert(
            "section_content".to_string(),
            node.map(|n| n.content.clone()).unwrap_or_default(),
        );
        bindings.insert("suggestions".to_string(), entry.suggestions.join("\n"));
        let prompt = template.render(&bindings)?;
        let completed = gateway.complete_structured(&prompt, &case_schema(), max_repairs)?;
        *depth_counter += 1;
        let case_id = format!("TC-DEP-{:04}", depth_counter);
        let required = vec![number.clone()];
        let (case, _) = case_from_value(&completed.value, &case_id, &required, tree);
        new_cases.push(case);
    }
    Ok(new_cases)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub initial_breadth: BreadthReport,
    pub final_breadth: BreadthReport,
    pub initial_depth: DepthReport,
    pub final_depth: DepthReport,
    pub rounds_used: u32,
    pub supplementary_cases: Vec<TestCase>,
}

/// Runs verification and refinement until coverage targets are met or the
/// round cap is reached.
#[allow(clippy::too_many_arguments)]
pub fn verify_and_refine(
    cases: &[TestCase],
    key_sections: &[(String, f64)],
    tree: &SpecTree,
    few_shots: &[TestCase],
    config: &CoverageConfig,
    gateway: &Gateway,
    templates: &BTreeMap<String, PromptTemplate>,
    max_repairs: u32,
) -> Result<VerificationOutcome, CaseError> {
    let mut all_cases: Vec<TestCase> = cases.to_vec();
    let initial_breadth = compute_breadth(&all_cases, key_sections);
    let initial_depth = judge_depth_all(
        key_sections,
        &all_cases,
        tree,
        gateway,
        templates,
        max_repairs,
    )?;
    let mut breadth = initial_breadth.clone();
    let mut depth = initial_depth.clone();
    let mut supplementary = Vec::new();
    let mut rounds_used = 0;
    let mut supplement_counter = 0u32;
    let mut depth_counter = 0u32;
    for _ in 0..config.max_refinement_rounds {
        let targets_met = breadth.uncovered().is_empty() && depth.meets_targets(config);
        if targets_met {
            break;
        }
        let new_cases = refine(
            &breadth,
            &depth,
            tree,
            few_shots,
            config,
            gateway,
            templates,
            max_repairs,
            (&mut supplement_counter, &mut depth_counter),
        )?;
        rounds_used += 1;
        if new_cases.is_empty() {
            break;
        }
        all_cases.extend(new_cases.iter().cloned());
        supplementary.extend(new_cases);
        breadth = compute_breadth(&all_cases, key_sections);
        depth = judge_depth_all(
            key_sections,
            &all_cases,
            tree,
            gateway,
            templates,
            max_repairs,
        )?;
    }
    Ok(VerificationOutcome {
        initial_breadth,
        final_breadth: breadth,
        initial_depth,
        final_depth: depth,
        rounds_used,
        supplementary_cases: supplementary,
    })
}
