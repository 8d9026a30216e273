//! Document cleaning: line-ending normalization, page header/footer and
//! form-feed removal. Body line order is preserved.

use super::{IngestError, IngestRules, RawSpecDocument};

pub fn clean_document(raw: &RawSpecDocument, rules: &IngestRules) -> Result<String, IngestError> {
    if raw.text.trim().is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    let normalized = raw.text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out: Vec<&str> = Vec::new();
    let mut at_page_start = false;
    for line in normalized.split('\n') {
        let (had_break, stripped) = strip_form_feed(line);
        if had_break {
            at_page_start = true;
        }
        let candidate = stripped;
        if candidate.trim().is_empty() {
            if had_break && candidate.is_empty() {
                // the form feed sat on its own line
                continue;
            }
            out.push(candidate);
            continue;
        }
        if rules.is_footer(candidate) {
            continue;
        }
        if at_page_start && rules.is_header(candidate) {
            at_page_start = false;
            continue;
        }
        at_page_start = false;
        out.push(candidate);
    }
    let cleaned = out.join("\n");
    if cleaned.trim().is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    Ok(cleaned)
}

/// Removes form feeds from a line, reporting whether one was present.
fn strip_form_feed(line: &str) -> (bool, &str) {
    match line.find('\u{000C}') {
        None => (false, line),
        Some(_) => {
            // form feeds only ever carry page-break semantics; the remainder
            // of the line (usually empty or a running header) is kept for the
            // header check
            let stripped = line.trim_matches('\u{000C}');
            (true, stripped)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> RawSpecDocument {
        RawSpecDocument::new("test", text)
    }

    #[test]
    fn page_footer_lines_removed() {
        let rules = IngestRules::default();
        let text = "body one\nAuthor   Standards Track   [Page 12]\nbody two\n";
        let cleaned = clean_document(&doc(text), &rules).unwrap();
        assert!(!cleaned.contains("[Page 12]"));
        assert!(cleaned.contains("body one"));
        assert!(cleaned.contains("body two"));
    }

    #[test]
    fn text_without_headers_is_identity() {
        let rules = IngestRules::default();
        let text = "line a\nline b\n\nline c";
        assert_eq!(clean_document(&doc(text), &rules).unwrap(), text);
    }

    #[test]
    fn form_feeds_and_running_headers_removed() {
        let rules = IngestRules::default();
        let text = "para one\n\nX   [Page 1]\n\u{000C}\nRFC 9999   Title   March 2024\n\npara two";
        let cleaned = clean_document(&doc(text), &rules).unwrap();
        assert!(!cleaned.contains('\u{000C}'));
        assert!(!cleaned.contains("RFC 9999"));
        assert!(cleaned.contains("para one"));
        assert!(cleaned.contains("para two"));
    }

    #[test]
    fn header_pattern_only_strips_at_page_start() {
        let rules = IngestRules::default();
        // column-0 "RFC 9999 ..." mid-page is body text and must survive
        let text = "intro\nRFC 9999 is referenced here\nmore";
        let cleaned = clean_document(&doc(text), &rules).unwrap();
        assert!(cleaned.contains("RFC 9999 is referenced here"));
    }

    #[test]
    fn empty_document_errors() {
        let rules = IngestRules::default();
        assert!(matches!(
            clean_document(&doc("   \n  "), &rules),
            Err(IngestError::EmptyDocument)
        ));
    }
}
