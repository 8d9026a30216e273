//! Embedded default data files and their loaders.
//!
//! Every heuristic table ships as JSON under `data/` and is compiled into the
//! binary; any of them can be overridden at runtime by pointing the run
//! configuration at a replacement file. New document styles, grammars, or
//! fault taxonomies therefore need no code change.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::gateway::PromptTemplate;
use crate::metrics::NormalizationRules;

pub const CLEANING_RULES: &str = include_str!("../data/cleaning_rules.json");
pub const AGENTS: &str = include_str!("../data/agents.json");
pub const TOOLKIT: &str = include_str!("../data/toolkit.json");
pub const REORDER_KEYWORDS: &str = include_str!("../data/reorder_keywords.json");
pub const TESTER_API: &str = include_str!("../data/tester_api.json");
pub const DUT_GRAMMAR: &str = include_str!("../data/dut_grammar.json");
pub const NORMALIZATION_RULES: &str = include_str!("../data/normalization_rules.json");
pub const FAULT_RULES: &str = include_str!("../data/fault_rules.json");
pub const ORIGIN_RULES: &str = include_str!("../data/origin_rules.json");
pub const FIX_TEMPLATES: &str = include_str!("../data/fix_templates.json");
pub const FEW_SHOT_CASES: &str = include_str!("../data/few_shot_cases.json");

macro_rules! prompt_files {
    ($($id:literal),+ $(,)?) => {
        &[$(($id, include_str!(concat!("../data/prompts/", $id, ".txt")))),+]
    };
}

/// (template_id, body) pairs for every shipped prompt.
pub const PROMPT_SOURCES: &[(&str, &str)] = prompt_files![
    "summarize_section",
    "form_modules",
    "supplement_modules",
    "model_fields",
    "model_fsm_overview",
    "model_fsm_section",
    "model_sequence",
    "model_specific",
    "generate_case",
    "judge_depth",
    "refine_breadth",
    "refine_depth",
    "orchestrate",
    "draft_artifact",
    "regenerate_case",
];

pub fn default_templates() -> BTreeMap<String, PromptTemplate> {
    PROMPT_SOURCES
        .iter()
        .map(|(id, body)| ((*id).to_string(), PromptTemplate::new(*id, *body)))
        .collect()
}

pub fn default_normalization_rules() -> NormalizationRules {
    serde_json::from_str(NORMALIZATION_RULES).expect("embedded normalization rules parse")
}

/// Parses an embedded default, or the replacement file when a path is given.
pub fn load_or_default<T: DeserializeOwned>(
    embedded: &str,
    override_path: Option<&Path>,
) -> Result<T, String> {
    match override_path {
        Some(p) => {
            let raw = std::fs::read_to_string(p)
                .map_err(|e| format!("failed to read {}: {e}", p.display()))?;
            serde_json::from_str(&raw).map_err(|e| format!("failed to parse {}: {e}", p.display()))
        }
        None => serde_json::from_str(embedded).map_err(|e| format!("embedded data invalid: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_defaults_parse() {
        default_normalization_rules();
        let templates = default_templates();
        assert_eq!(templates.len(), PROMPT_SOURCES.len());
        let _: serde_json::Value = serde_json::from_str(CLEANING_RULES).unwrap();
        let _: serde_json::Value = serde_json::from_str(AGENTS).unwrap();
        let _: serde_json::Value = serde_json::from_str(TOOLKIT).unwrap();
        let _: serde_json::Value = serde_json::from_str(TESTER_API).unwrap();
        let _: serde_json::Value = serde_json::from_str(DUT_GRAMMAR).unwrap();
        let _: serde_json::Value = serde_json::from_str(FAULT_RULES).unwrap();
        let _: serde_json::Value = serde_json::from_str(FIX_TEMPLATES).unwrap();
        let _: serde_json::Value = serde_json::from_str(FEW_SHOT_CASES).unwrap();
    }
}
