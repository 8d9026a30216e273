//! Specification ingestion: clean a raw document, extract metadata, and build
//! the hierarchical section tree with populated content.
//!
//! The section counting convention, calibrated against RFC-style documents:
//! a section is any numbered TOC entry (dotted-decimal like `3.9.1` or
//! appendix-letter like `A.4`, including `Appendix X.n` spellings), plus any
//! unnumbered TOC entry whose title is substantive back-matter (references,
//! security/IANA considerations, footnotes — see the include list in the
//! cleaning-rules data file). Administrative entries (author addresses,
//! copyright statements, bare "Appendices" pointers) are skipped. Kept
//! unnumbered entries receive synthetic sequential top-level numbers and are
//! flagged. Body headings absent from the TOC are attached at the inferred
//! position and flagged `body_only` when they carry a number and a title.

mod clean;
mod rules;
mod toc;
mod tree;

pub use clean::clean_document;
pub use rules::IngestRules;
pub use toc::extract_metadata;
pub use tree::{build_section_tree, NodeId, SectionNode, SpecTree};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("document is empty after cleaning")]
    EmptyDocument,
    #[error("no table-of-contents block found")]
    MissingToc,
    #[error("malformed table-of-contents entry: {line:?}")]
    MalformedTocEntry { line: String },
    #[error("section {0} listed in the table of contents has no body heading")]
    SectionBodyNotFound(String),
    #[error("invalid ingest rules: {0}")]
    InvalidRules(String),
    #[error("artifact error: {0}")]
    Artifact(String),
}

/// A raw specification document, line-oriented text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSpecDocument {
    pub source_id: String,
    pub text: String,
}

impl RawSpecDocument {
    pub fn new(source_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            source_id: source_id.into(),
            text: text.into(),
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IngestError::Artifact(format!("read {}: {e}", path.display())))?;
        Ok(Self::new(path.display().to_string(), text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TocEntry {
    pub number: String,
    pub title: String,
    /// True when the entry was unnumbered in the document and the number was
    /// synthesized from the back-matter include list.
    #[serde(default)]
    pub synthetic_number: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecMetadata {
    pub spec_number: String,
    pub title: String,
    pub abstract_text: String,
    pub toc_entries: Vec<TocEntry>,
}

/// Full ingestion: clean, extract metadata, build the tree.
pub fn ingest_document(
    raw: &RawSpecDocument,
    rules: &IngestRules,
) -> Result<SpecTree, IngestError> {
    let cleaned = clean_document(raw, rules)?;
    let metadata = extract_metadata(&cleaned, rules)?;
    build_section_tree(&metadata, &cleaned, rules)
}
