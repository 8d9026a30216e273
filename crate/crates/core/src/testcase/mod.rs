//! Test case generation from testing points, coverage verification (breadth
//! and depth), and iterative refinement.

mod generate;
mod score;
mod verify;

pub use generate::{
    case_from_value, case_schema, generate_case, generate_cases, GenerationContext,
};
pub use score::{compute_score, select_key_sections};
pub use verify::{
    compute_breadth, judge_depth, judge_depth_all, refine, verify_and_refine, BreadthReport,
    DepthEntry, DepthReport, KeySection, VerificationOutcome,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("classification `{0}` has no weight in the coverage config")]
    UnknownClassification(String),
    #[error("testing point rejected before prompting: {0}")]
    InvalidPoint(String),
    #[error("invalid coverage config: {0}")]
    InvalidConfig(String),
}

/// Warnings that do not stop a run but are worth surfacing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseWarning {
    /// The model dropped the point's reference sections; they were restored.
    ReferenceDrift { case_id: String },
    /// The model produced reference sections that do not resolve in the tree.
    UnresolvedReferences {
        case_id: String,
        dropped: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub case_id: String,
    pub title: String,
    pub objective: String,
    pub steps: Vec<String>,
    pub expected_results: Vec<String>,
    pub reference_sections: Vec<String>,
    pub topology: String,
    pub parameters: BTreeMap<String, String>,
}

/// Tunables for coverage verification and refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageConfig {
    /// classification name -> weight in [0,1]
    pub weight_map: BTreeMap<String, f64>,
    pub threshold: f64,
    pub max_refinement_rounds: u32,
    /// Depth-score targets for the refinement loop exit.
    pub basic_target: f64,
    pub boundary_target: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        let mut weight_map = BTreeMap::new();
        weight_map.insert("functional".to_string(), 1.0);
        weight_map.insert("configuration".to_string(), 0.8);
        weight_map.insert("descriptive".to_string(), 0.4);
        weight_map.insert("appendix".to_string(), 0.2);
        Self {
            weight_map,
            threshold: 50.0,
            max_refinement_rounds: 1,
            basic_target: 90.0,
            boundary_target: 78.0,
        }
    }
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<(), CaseError> {
        for (name, w) in &self.weight_map {
            if !(0.0..=1.0).contains(w) {
                return Err(CaseError::InvalidConfig(format!(
                    "weight for `{name}` must lie in [0,1], got {w}"
                )));
            }
        }
        if self.threshold < 0.0 {
            return Err(CaseError::InvalidConfig(format!(
                "threshold must be non-negative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}
