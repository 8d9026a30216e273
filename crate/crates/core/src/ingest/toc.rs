//! Metadata extraction: document number, title, abstract, and the table of
//! contents.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::{IngestError, IngestRules, SpecMetadata, TocEntry};

static SPEC_NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:Request\s+for\s+Comments|RFC)[:\s]+(\d+)").expect("static regex")
});
static TOC_HEADING_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*Table\s+of\s+Contents\s*$").expect("static regex"));
static STATUS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^Status\s+of\s+this\s+Memo\s*$").expect("static regex"));
static ABSTRACT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^Abstract\s*$").expect("static regex"));
/// entry text split into number / trailing dot / separator / title
static ENTRY_NUM_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(Appendix\s+)?((?:\d+(?:\.\d+)*)|(?:[A-Z](?:\.\d+)*))(\.)?(\s+)(\S.*)$")
        .expect("static regex")
});
static ENTRY_NUM_ONLY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(Appendix\s+)?((?:\d+(?:\.\d+)*)|(?:[A-Z](?:\.\d+)*))\.?$").expect("static regex")
});
/// "<entry> <leaders or wide gap> <page>"
static PAGE_LINE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(.+?)(?:\s*\.(?:\s*\.)+\s*|\s{2,})(\d+)\s*$").expect("static regex")
});

pub(super) fn toc_heading_index(lines: &[&str]) -> Option<usize> {
    lines.iter().position(|l| TOC_HEADING_RE.is_match(l))
}

/// One parsed TOC line before the include/exclude policy is applied.
#[derive(Debug)]
struct RawEntry {
    number: Option<String>,
    title: String,
    line: String,
}

fn split_number(entry_text: &str) -> Option<(String, String)> {
    let caps = ENTRY_NUM_RE.captures(entry_text)?;
    let appendix_prefix = caps.get(1).is_some();
    let number = caps.get(2).expect("group").as_str();
    let trailing_dot = caps.get(3).is_some();
    let sep = caps.get(4).expect("group").as_str();
    let title = caps.get(5).expect("group").as_str();
    // a bare single capital letter with a single-space separator is far more
    // likely a title word ("A note on ...") than an appendix number
    let single_letter = number.len() == 1 && number.chars().next().unwrap().is_ascii_alphabetic();
    if single_letter && !appendix_prefix && !trailing_dot && sep.len() < 2 {
        return None;
    }
    Some((number.to_string(), title.trim().to_string()))
}

/// Parses the TOC region starting right after the heading line. Returns the
/// entries and the index of the first line past the region.
pub(super) fn parse_toc_region(
    lines: &[&str],
    heading_idx: usize,
    rules: &IngestRules,
) -> Result<(Vec<TocEntry>, usize), IngestError> {
    let mut raw_entries: Vec<RawEntry> = Vec::new();
    let mut pending: Option<RawEntry> = None;
    let mut end = lines.len();
    let mut seen_entry = false;
    for (offset, line) in lines[heading_idx + 1..].iter().enumerate() {
        let idx = heading_idx + 1 + offset;
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            // column-0 text: the body begins
            end = idx;
            break;
        }
        let trimmed = line.trim();
        if let Some(caps) = PAGE_LINE_RE.captures(trimmed) {
            let entry_text = caps.get(1).expect("group").as_str().trim();
            if ENTRY_NUM_ONLY_RE.is_match(entry_text) {
                return Err(IngestError::MalformedTocEntry {
                    line: line.to_string(),
                });
            }
            match split_number(entry_text) {
                Some((number, title)) => {
                    if let Some(p) = pending.take() {
                        return Err(IngestError::MalformedTocEntry { line: p.line });
                    }
                    raw_entries.push(RawEntry {
                        number: Some(number),
                        title,
                        line: line.to_string(),
                    });
                }
                None => {
                    if let Some(mut p) = pending.take() {
                        // tail of a wrapped title carrying the page number
                        p.title = format!("{} {}", p.title, entry_text);
                        raw_entries.push(p);
                    } else {
                        raw_entries.push(RawEntry {
                            number: None,
                            title: entry_text.to_string(),
                            line: line.to_string(),
                        });
                    }
                }
            }
            seen_entry = true;
        } else if let Some((number, title)) = split_number(trimmed) {
            // a wrapped entry: number and title start, page on a later line
            if let Some(p) = pending.take() {
                return Err(IngestError::MalformedTocEntry { line: p.line });
            }
            pending = Some(RawEntry {
                number: Some(number),
                title,
                line: line.to_string(),
            });
        } else if let Some(p) = pending.as_mut() {
            p.title = format!("{} {}", p.title, trimmed);
        } else if seen_entry {
            // stray prose inside the region is ignored
            continue;
        }
    }
    if let Some(p) = pending {
        return Err(IngestError::MalformedTocEntry { line: p.line });
    }

    // apply the back-matter policy and synthesize numbers
    let mut max_top: u64 = 0;
    for e in &raw_entries {
        if let Some(n) = &e.number {
            if let Some(first) = n.split('.').next() {
                if let Ok(v) = first.parse::<u64>() {
                    max_top = max_top.max(v);
                }
            }
        }
    }
    let mut entries = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut next_synthetic = max_top + 1;
    for e in raw_entries {
        match e.number {
            Some(number) => {
                if !seen.insert(number.clone()) {
                    return Err(IngestError::MalformedTocEntry { line: e.line });
                }
                entries.push(TocEntry {
                    number,
                    title: e.title,
                    synthetic_number: false,
                });
            }
            None => {
                let key = e.title.to_lowercase();
                if rules.backmatter_include.contains(&key) {
                    let number = next_synthetic.to_string();
                    next_synthetic += 1;
                    if !seen.insert(number.clone()) {
                        return Err(IngestError::MalformedTocEntry { line: e.line });
                    }
                    entries.push(TocEntry {
                        number,
                        title: e.title,
                        synthetic_number: true,
                    });
                }
                // excluded and unknown unnumbered entries are not sections
            }
        }
    }
    if entries.is_empty() {
        return Err(IngestError::MissingToc);
    }
    Ok((entries, end))
}

fn extract_spec_number(lines: &[&str]) -> String {
    lines
        .iter()
        .take(60)
        .find_map(|l| SPEC_NUMBER_RE.captures(l))
        .map(|c| c[1].to_string())
        .unwrap_or_default()
}

fn extract_title(lines: &[&str]) -> String {
    if let Some(status_idx) = lines.iter().position(|l| STATUS_RE.is_match(l)) {
        let mut end = status_idx;
        while end > 0 && lines[end - 1].trim().is_empty() {
            end -= 1;
        }
        let mut start = end;
        while start > 0 && !lines[start - 1].trim().is_empty() {
            start -= 1;
        }
        let title = lines[start..end]
            .iter()
            .map(|l| l.trim())
            .collect::<Vec<_>>()
            .join(" ");
        if !title.is_empty() {
            return title;
        }
    }
    lines
        .iter()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .unwrap_or_default()
}

fn extract_abstract(lines: &[&str]) -> String {
    let Some(start) = lines.iter().position(|l| ABSTRACT_RE.is_match(l)) else {
        return String::new();
    };
    let mut collected = Vec::new();
    for line in &lines[start + 1..] {
        if !line.trim().is_empty() && !line.starts_with(' ') {
            break;
        }
        collected.push(line.trim());
    }
    collected
        .join(" ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Extracts document metadata from cleaned text. The precondition is a
/// table-of-contents block; everything else degrades gracefully.
pub fn extract_metadata(cleaned: &str, rules: &IngestRules) -> Result<SpecMetadata, IngestError> {
    let lines: Vec<&str> = cleaned.lines().collect();
    let heading_idx = toc_heading_index(&lines).ok_or(IngestError::MissingToc)?;
    let (toc_entries, _) = parse_toc_region(&lines, heading_idx, rules)?;
    let title = extract_title(&lines);
    let mut abstract_text = extract_abstract(&lines);
    if abstract_text.is_empty() {
        abstract_text = title.clone();
    }
    Ok(SpecMetadata {
        spec_number: extract_spec_number(&lines),
        title,
        abstract_text,
        toc_entries,
    })
}
