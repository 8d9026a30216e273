//! Summary-index retrieval: descend the hierarchical index by lexical
//! relevance of node summaries, return the top-k payloads with their paths.

use serde::{Deserialize, Serialize};

use super::kb::{token_overlap, SummaryIndexNode};
use super::ForgeError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievedEntry {
    pub payload_ref: String,
    /// entry_ids from the root to the leaf.
    pub path: Vec<String>,
    pub score: f64,
    /// Set when the query had no lexical overlap anywhere and the result is
    /// the root-level fallback.
    #[serde(default)]
    pub low_confidence: bool,
}

/// Retrieves up to `k` payload entries for a query.
pub fn retrieve(
    index: &SummaryIndexNode,
    query: &str,
    k: usize,
) -> Result<Vec<RetrievedEntry>, ForgeError> {
    if index.leaf_count() == 0 {
        return Err(ForgeError::EmptyIndex);
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut leaves: Vec<RetrievedEntry> = Vec::new();
    collect_leaves(index, query, &mut Vec::new(), &mut leaves);
    let any_overlap = leaves.iter().any(|l| l.score > 0.0);
    if !any_overlap {
        // fall back to the root-level children, flagged low-confidence
        let mut fallback: Vec<RetrievedEntry> = Vec::new();
        for child in &index.children {
            if let Some(first) = first_leaf(child, &mut vec![index.entry_id.clone()]) {
                fallback.push(RetrievedEntry {
                    low_confidence: true,
                    score: 0.0,
                    ..first
                });
            }
            if fallback.len() == k {
                break;
            }
        }
        if fallback.is_empty() {
            if let Some(first) = first_leaf(index, &mut Vec::new()) {
                fallback.push(RetrievedEntry {
                    low_confidence: true,
                    score: 0.0,
                    ..first
                });
            }
        }
        return Ok(fallback);
    }
    leaves.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.path.cmp(&b.path))
    });
    leaves.truncate(k);
    Ok(leaves)
}

fn collect_leaves(
    node: &SummaryIndexNode,
    query: &str,
    path: &mut Vec<String>,
    out: &mut Vec<RetrievedEntry>,
) {
    path.push(node.entry_id.clone());
    // relevance accumulates down the path so a relevant branch lifts its
    // leaves
    let own = relevance(&node.summary, query);
    if let Some(payload) = &node.payload_ref {
        let path_score: f64 = own;
        out.push(RetrievedEntry {
            payload_ref: payload.clone(),
            path: path.clone(),
            score: path_score,
            low_confidence: false,
        });
    }
    for child in &node.children {
        let before = out.len();
        collect_leaves(child, query, path, out);
        // propagate the branch relevance to descendants
        for entry in &mut out[before..] {
            entry.score += own;
        }
    }
    path.pop();
}

fn first_leaf(node: &SummaryIndexNode, path: &mut Vec<String>) -> Option<RetrievedEntry> {
    path.push(node.entry_id.clone());
    if let Some(payload) = &node.payload_ref {
        let entry = RetrievedEntry {
            payload_ref: payload.clone(),
            path: path.clone(),
            score: 0.0,
            low_confidence: false,
        };
        path.pop();
        return Some(entry);
    }
    for child in &node.children {
        if let Some(found) = first_leaf(child, path) {
            path.pop();
            return Some(found);
        }
    }
    path.pop();
    None
}

fn relevance(summary: &str, query: &str) -> f64 {
    token_overlap(&summary.to_lowercase(), &query.to_lowercase())
}
