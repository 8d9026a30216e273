//! Section tree construction: anchor every TOC entry to its body heading,
//! slice content between anchors, attach body-only discoveries, and assemble
//! the hierarchy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::toc::{parse_toc_region, toc_heading_index};
use super::{IngestError, IngestRules, SpecMetadata, TocEntry};

pub type NodeId = usize;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionNode {
    pub number: String,
    pub title: String,
    pub content: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub depth: usize,
    #[serde(default)]
    pub body_only: bool,
    #[serde(default)]
    pub synthetic_number: bool,
}

impl SectionNode {
    pub fn has_content(&self) -> bool {
        !self.content.trim().is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SpecTree {
    pub metadata: SpecMetadata,
    pub roots: Vec<NodeId>,
    nodes: Vec<SectionNode>,
    index: BTreeMap<String, NodeId>,
}

impl SpecTree {
    pub fn node(&self, id: NodeId) -> &SectionNode {
        &self.nodes[id]
    }

    pub fn get(&self, number: &str) -> Option<&SectionNode> {
        self.index.get(number).map(|id| &self.nodes[*id])
    }

    pub fn contains(&self, number: &str) -> bool {
        self.index.contains_key(number)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index(&self) -> &BTreeMap<String, NodeId> {
        &self.index
    }

    /// Node ids in document order (pre-order walk of the hierarchy).
    pub fn pre_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            for child in self.nodes[id].children.iter().rev() {
                stack.push(*child);
            }
        }
        out
    }

    /// Sections whose own content is non-blank, document order.
    pub fn content_bearing(&self) -> Vec<&SectionNode> {
        self.pre_order()
            .into_iter()
            .map(|id| &self.nodes[id])
            .filter(|n| n.has_content())
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        fn nest(tree: &SpecTree, id: NodeId) -> serde_json::Value {
            let n = tree.node(id);
            serde_json::json!({
                "number": n.number,
                "title": n.title,
                "content": n.content,
                "depth": n.depth,
                "body_only": n.body_only,
                "synthetic_number": n.synthetic_number,
                "children": n.children.iter().map(|c| nest(tree, *c)).collect::<Vec<_>>(),
            })
        }
        serde_json::json!({
            "metadata": self.metadata,
            "sections": self.roots.iter().map(|r| nest(self, *r)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, IngestError> {
        let metadata: SpecMetadata = serde_json::from_value(value["metadata"].clone())
            .map_err(|e| IngestError::Artifact(format!("tree metadata: {e}")))?;
        let mut tree = SpecTree {
            metadata,
            roots: Vec::new(),
            nodes: Vec::new(),
            index: BTreeMap::new(),
        };
        fn walk(
            tree: &mut SpecTree,
            value: &serde_json::Value,
            parent: Option<NodeId>,
            depth: usize,
        ) -> Result<NodeId, IngestError> {
            let number = value["number"]
                .as_str()
                .ok_or_else(|| IngestError::Artifact("tree node missing number".into()))?
                .to_string();
            let id = tree.nodes.len();
            tree.nodes.push(SectionNode {
                number: number.clone(),
                title: value["title"].as_str().unwrap_or_default().to_string(),
                content: value["content"].as_str().unwrap_or_default().to_string(),
                children: Vec::new(),
                parent,
                depth,
                body_only: value["body_only"].as_bool().unwrap_or(false),
                synthetic_number: value["synthetic_number"].as_bool().unwrap_or(false),
            });
            tree.index.insert(number, id);
            if let Some(children) = value["children"].as_array() {
                for child in children {
                    let cid = walk(tree, child, Some(id), depth + 1)?;
                    tree.nodes[id].children.push(cid);
                }
            }
            Ok(id)
        }
        if let Some(sections) = value["sections"].as_array() {
            for section in sections {
                let id = walk(&mut tree, section, None, 1)?;
                tree.roots.push(id);
            }
        }
        Ok(tree)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), IngestError> {
        let pretty = serde_json::to_string_pretty(&self.to_json_value())
            .map_err(|e| IngestError::Artifact(e.to_string()))?;
        std::fs::write(path, pretty + "\n")
            .map_err(|e| IngestError::Artifact(format!("write {}: {e}", path.display())))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, IngestError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| IngestError::Artifact(format!("read {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&raw).map_err(|e| IngestError::Artifact(e.to_string()))?;
        Self::from_json_value(&value)
    }
}

/// Component-wise ordering key: numeric components sort numerically and
/// before appendix letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Component {
    Num(u64),
    Alpha(String),
}

fn sort_key(number: &str) -> Vec<Component> {
    number
        .split('.')
        .map(|part| match part.parse::<u64>() {
            Ok(v) => Component::Num(v),
            Err(_) => Component::Alpha(part.to_string()),
        })
        .collect()
}

#[derive(Debug)]
struct Candidate {
    line_idx: usize,
    indent: usize,
    number: Option<String>,
    title: String,
    claimed: bool,
}

fn body_heading(line: &str) -> Option<(Option<String>, String)> {
    use std::sync::LazyLock;
    static TITLED: LazyLock<regex::Regex> = LazyLock::new(|| {
        regex::Regex::new(r"^(?:Appendix\s+)?((?:\d+(?:\.\d+)*)|(?:[A-Z](?:\.\d+)*))\.?\s+(\S.*)$")
            .expect("static regex")
    });
    static BARE: LazyLock<regex::Regex> = LazyLock::new(|| {
        regex::Regex::new(r"^(?:Appendix\s+)?((?:\d+(?:\.\d+)*)|(?:[A-Z](?:\.\d+)*))\.?\s*$")
            .expect("static regex")
    });
    if let Some(caps) = TITLED.captures(line) {
        let number = caps[1].to_string();
        let title = caps[2].trim().to_string();
        // require the title to read like one: starts alphabetic
        if title.chars().next().is_some_and(|c| c.is_alphabetic()) {
            return Some((Some(number), title));
        }
        return None;
    }
    if let Some(caps) = BARE.captures(line) {
        return Some((Some(caps[1].to_string()), String::new()));
    }
    Some((None, line.trim().to_string()))
}

fn title_words(title: &str) -> Vec<String> {
    title
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_string())
        .collect()
}

fn title_similarity(a: &str, b: &str) -> f64 {
    let wa = title_words(a);
    let wb = title_words(b);
    if wa.is_empty() || wb.is_empty() {
        return 0.0;
    }
    let sa: std::collections::BTreeSet<_> = wa.iter().collect();
    let sb: std::collections::BTreeSet<_> = wb.iter().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    inter as f64 / union as f64
}

/// Builds the section tree from extracted metadata and cleaned text.
pub fn build_section_tree(
    metadata: &SpecMetadata,
    cleaned: &str,
    rules: &IngestRules,
) -> Result<SpecTree, IngestError> {
    let lines: Vec<&str> = cleaned.lines().collect();
    let heading_idx = toc_heading_index(&lines).ok_or(IngestError::MissingToc)?;
    let (_, toc_end) = parse_toc_region(&lines, heading_idx, rules)?;

    // heading candidates in the body; numbered headings may be indented
    // (some documents indent by depth), unnumbered anchors must sit at
    // column 0
    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(toc_end) {
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        if let Some((number, title)) = body_heading(trimmed) {
            if number.is_none() && indent > 0 {
                continue;
            }
            candidates.push(Candidate {
                line_idx: i,
                indent,
                number,
                title,
                claimed: false,
            });
        }
    }

    // anchor every TOC entry, scanning forward monotonically
    let mut anchors: Vec<(usize, &TocEntry)> = Vec::new(); // (candidate idx, entry)
    let mut cursor = 0usize;
    for entry in &metadata.toc_entries {
        let found = if entry.synthetic_number {
            find_unnumbered(&candidates, cursor, &entry.title)
        } else {
            find_numbered(&candidates, cursor, entry)
        };
        match found {
            Some(idx) => {
                candidates[idx].claimed = true;
                anchors.push((idx, entry));
                cursor = idx + 1;
            }
            None => return Err(IngestError::SectionBodyNotFound(entry.number.clone())),
        }
    }

    // unclaimed numbered candidates with a real title are body-only sections
    let known: std::collections::BTreeSet<&str> = metadata
        .toc_entries
        .iter()
        .map(|e| e.number.as_str())
        .collect();
    let mut body_only: Vec<(usize, String, String)> = Vec::new(); // (candidate idx, number, title)
    for (i, c) in candidates.iter().enumerate() {
        if c.claimed {
            continue;
        }
        if let Some(number) = &c.number {
            if c.indent == 0 && !c.title.is_empty() && !known.contains(number.as_str()) {
                if body_only.iter().any(|(_, n, _)| n == number) {
                    continue;
                }
                body_only.push((i, number.clone(), c.title.clone()));
            }
        }
    }

    // all section boundaries, in document order
    #[derive(Debug)]
    struct Pending {
        line_idx: usize,
        number: String,
        title: String,
        body_only: bool,
        synthetic: bool,
    }
    let mut sections: Vec<Pending> = anchors
        .iter()
        .map(|(ci, entry)| Pending {
            line_idx: candidates[*ci].line_idx,
            number: entry.number.clone(),
            title: entry.title.clone(),
            body_only: false,
            synthetic: entry.synthetic_number,
        })
        .collect();
    for (ci, number, title) in body_only {
        sections.push(Pending {
            line_idx: candidates[ci].line_idx,
            number,
            title,
            body_only: true,
            synthetic: false,
        });
    }
    sections.sort_by_key(|p| p.line_idx);

    // slice content between consecutive boundaries
    let mut contents: Vec<String> = Vec::with_capacity(sections.len());
    for (i, section) in sections.iter().enumerate() {
        let start = section.line_idx + 1;
        let end = sections
            .get(i + 1)
            .map(|next| next.line_idx)
            .unwrap_or(lines.len());
        let mut slice: Vec<&str> = lines[start..end].to_vec();
        while slice.last().is_some_and(|l| l.trim().is_empty()) {
            slice.pop();
        }
        while slice.first().is_some_and(|l| l.trim().is_empty()) {
            slice.remove(0);
        }
        contents.push(slice.join("\n"));
    }

    // assemble the arena
    let mut tree = SpecTree {
        metadata: metadata.clone(),
        roots: Vec::new(),
        nodes: Vec::new(),
        index: BTreeMap::new(),
    };
    for (section, content) in sections.iter().zip(contents) {
        let id = tree.nodes.len();
        tree.nodes.push(SectionNode {
            number: section.number.clone(),
            title: section.title.clone(),
            content,
            children: Vec::new(),
            parent: None,
            depth: 1,
            body_only: section.body_only,
            synthetic_number: section.synthetic,
        });
        tree.index.insert(section.number.clone(), id);
    }

    // link parents by longest existing proper prefix
    for id in 0..tree.nodes.len() {
        let number = tree.nodes[id].number.clone();
        let mut parts: Vec<&str> = number.split('.').collect();
        let mut parent: Option<NodeId> = None;
        while parts.len() > 1 {
            parts.pop();
            let prefix = parts.join(".");
            if let Some(pid) = tree.index.get(&prefix) {
                parent = Some(*pid);
                break;
            }
        }
        tree.nodes[id].parent = parent;
        match parent {
            Some(pid) => tree.nodes[pid].children.push(id),
            None => tree.roots.push(id),
        }
    }

    // children ordered by numeric component; roots stay in document order
    for id in 0..tree.nodes.len() {
        let mut children = std::mem::take(&mut tree.nodes[id].children);
        children.sort_by(|a, b| {
            sort_key(&tree.nodes[*a].number).cmp(&sort_key(&tree.nodes[*b].number))
        });
        tree.nodes[id].children = children;
    }

    // depths follow the parent chain
    fn set_depth(tree: &mut SpecTree, id: NodeId, depth: usize) {
        tree.nodes[id].depth = depth;
        for child in tree.nodes[id].children.clone() {
            set_depth(tree, child, depth + 1);
        }
    }
    for root in tree.roots.clone() {
        set_depth(&mut tree, root, 1);
    }

    Ok(tree)
}

fn find_numbered(candidates: &[Candidate], cursor: usize, entry: &TocEntry) -> Option<usize> {
    let matches: Vec<usize> = candidates
        .iter()
        .enumerate()
        .skip(cursor)
        .filter(|(_, c)| !c.claimed && c.number.as_deref() == Some(entry.number.as_str()))
        .map(|(i, _)| i)
        .collect();
    if matches.is_empty() {
        return None;
    }
    matches
        .iter()
        .copied()
        .find(|i| title_similarity(&candidates[*i].title, &entry.title) >= 0.5)
        .or(Some(matches[0]))
}

fn find_unnumbered(candidates: &[Candidate], cursor: usize, title: &str) -> Option<usize> {
    let want = title_words(title);
    candidates
        .iter()
        .enumerate()
        .skip(cursor)
        .find(|(_, c)| !c.claimed && c.number.is_none() && title_words(&c.title) == want)
        .map(|(i, _)| i)
}
