//! Data-driven ingestion heuristics: page header/footer patterns and the TOC
//! back-matter include/exclude title lists.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawIngestRules {
    pub footer_patterns: Vec<String>,
    pub header_patterns: Vec<String>,
    #[serde(default)]
    pub toc_backmatter_include: Vec<String>,
    #[serde(default)]
    pub toc_backmatter_exclude: Vec<String>,
}

#[derive(Debug)]
pub struct IngestRules {
    pub footers: Vec<Regex>,
    pub headers: Vec<Regex>,
    pub backmatter_include: BTreeSet<String>,
    pub backmatter_exclude: BTreeSet<String>,
}

impl IngestRules {
    pub fn from_raw(raw: &RawIngestRules) -> Result<Self, IngestError> {
        let compile = |patterns: &[String]| -> Result<Vec<Regex>, IngestError> {
            patterns
                .iter()
                .map(|p| Regex::new(p).map_err(|e| IngestError::InvalidRules(format!("{p}: {e}"))))
                .collect()
        };
        Ok(Self {
            footers: compile(&raw.footer_patterns)?,
            headers: compile(&raw.header_patterns)?,
            backmatter_include: raw
                .toc_backmatter_include
                .iter()
                .map(|s| s.to_lowercase())
                .collect(),
            backmatter_exclude: raw
                .toc_backmatter_exclude
                .iter()
                .map(|s| s.to_lowercase())
                .collect(),
        })
    }

    pub fn from_json(json: &str) -> Result<Self, IngestError> {
        let raw: RawIngestRules =
            serde_json::from_str(json).map_err(|e| IngestError::InvalidRules(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn load(path: Option<&std::path::Path>) -> Result<Self, IngestError> {
        match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p)
                    .map_err(|e| IngestError::InvalidRules(format!("{}: {e}", p.display())))?;
                Self::from_json(&raw)
            }
            None => Self::from_json(crate::datafiles::CLEANING_RULES),
        }
    }

    pub fn is_footer(&self, line: &str) -> bool {
        self.footers.iter().any(|re| re.is_match(line))
    }

    pub fn is_header(&self, line: &str) -> bool {
        self.headers.iter().any(|re| re.is_match(line))
    }
}

impl Default for IngestRules {
    fn default() -> Self {
        Self::from_json(crate::datafiles::CLEANING_RULES).expect("embedded rules valid")
    }
}
