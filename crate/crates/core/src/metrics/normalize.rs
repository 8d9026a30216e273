//! Line normalization: comment/blank filtering, whitespace collapsing, and
//! data-driven equivalence rewrites to a canonical form.

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Script,
    Config,
}

/// One equivalence rewrite. Rules apply in order; `netmask_to_cidr` is a
/// builtin that needs arithmetic a plain regex replacement cannot express.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquivalenceRule {
    NetmaskToCidr,
    Regex {
        pattern: String,
        replacement: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationRules {
    pub config_comment_prefixes: Vec<String>,
    pub script_comment_prefixes: Vec<String>,
    pub rules: Vec<EquivalenceRule>,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        crate::datafiles::default_normalization_rules()
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Converts a dotted-quad netmask to a prefix length, only for contiguous
/// masks; non-contiguous masks are left untouched.
fn mask_to_prefix(mask: &str) -> Option<u32> {
    let mut bits: u32 = 0;
    let mut octets = 0;
    for part in mask.split('.') {
        let octet: u32 = part.parse().ok()?;
        if octet > 255 {
            return None;
        }
        bits = (bits << 8) | octet;
        octets += 1;
    }
    if octets != 4 {
        return None;
    }
    let ones = bits.count_ones();
    // contiguous mask: all ones at the top
    (bits.leading_ones() == ones).then_some(ones)
}

fn apply_netmask_rule(line: &str) -> String {
    // "<ip> <mask>" pairs anywhere in the line become "<ip>/<len>"
    let re =
        Regex::new(r"(\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}) (\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3})")
            .expect("static regex");
    let mut out = String::new();
    let mut last = 0;
    for caps in re.captures_iter(line) {
        let whole = caps.get(0).unwrap();
        let addr = caps.get(1).unwrap().as_str();
        let mask = caps.get(2).unwrap().as_str();
        out.push_str(&line[last..whole.start()]);
        match mask_to_prefix(mask) {
            Some(len) => {
                out.push_str(addr);
                out.push('/');
                out.push_str(&len.to_string());
            }
            None => out.push_str(whole.as_str()),
        }
        last = whole.end();
    }
    out.push_str(&line[last..]);
    out
}

/// Normalizes one raw line into a comparison unit, or `None` for blanks and
/// comments.
pub fn normalize_line(raw: &str, kind: LineKind, rules: &NormalizationRules) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    let prefixes = match kind {
        LineKind::Config => &rules.config_comment_prefixes,
        LineKind::Script => &rules.script_comment_prefixes,
    };
    if prefixes.iter().any(|p| trimmed.starts_with(p.as_str())) {
        return None;
    }
    let mut unit = collapse_whitespace(trimmed);
    for rule in &rules.rules {
        unit = match rule {
            EquivalenceRule::NetmaskToCidr => apply_netmask_rule(&unit),
            EquivalenceRule::Regex {
                pattern,
                replacement,
            } => match Regex::new(pattern) {
                Ok(re) => re.replace_all(&unit, replacement.as_str()).into_owned(),
                Err(_) => unit,
            },
        };
    }
    Some(unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn netmask_rewrites_to_cidr() {
        let rules = NormalizationRules::default();
        assert_eq!(
            normalize_line(
                "ip address 10.0.0.1 255.255.255.0",
                LineKind::Config,
                &rules
            ),
            Some("ip address 10.0.0.1/24".to_string())
        );
        assert_eq!(
            normalize_line("ip address 10.0.0.1/24", LineKind::Config, &rules),
            Some("ip address 10.0.0.1/24".to_string())
        );
    }

    #[test]
    fn comment_and_blank_lines_drop() {
        let rules = NormalizationRules::default();
        assert_eq!(normalize_line("! comment", LineKind::Config, &rules), None);
        assert_eq!(normalize_line("# note", LineKind::Script, &rules), None);
        assert_eq!(normalize_line("   ", LineKind::Config, &rules), None);
    }

    #[test]
    fn whitespace_collapses() {
        let rules = NormalizationRules::default();
        assert_eq!(
            normalize_line("  ip   address 10.0.0.1/24 ", LineKind::Config, &rules),
            Some("ip address 10.0.0.1/24".to_string())
        );
    }

    #[test]
    fn non_contiguous_mask_left_alone() {
        let rules = NormalizationRules::default();
        assert_eq!(
            normalize_line("ip address 10.0.0.1 255.0.255.0", LineKind::Config, &rules),
            Some("ip address 10.0.0.1 255.0.255.0".to_string())
        );
    }

    #[test]
    fn mask_prefix_table() {
        assert_eq!(mask_to_prefix("255.255.255.0"), Some(24));
        assert_eq!(mask_to_prefix("255.255.255.255"), Some(32));
        assert_eq!(mask_to_prefix("0.0.0.0"), Some(0));
        assert_eq!(mask_to_prefix("255.255.128.0"), Some(17));
        assert_eq!(mask_to_prefix("255.0.255.0"), None);
        assert_eq!(mask_to_prefix("10.0.0"), None);
    }

    #[test]
    fn normalization_idempotent() {
        let rules = NormalizationRules::default();
        let once = normalize_line(
            "ip address 192.168.1.1 255.255.0.0",
            LineKind::Config,
            &rules,
        )
        .unwrap();
        let twice = normalize_line(&once, LineKind::Config, &rules).unwrap();
        assert_eq!(once, twice);
    }
}
