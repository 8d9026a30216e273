//! DUT CLI grammar: command templates with typed slots, loaded from data
//! files. Normalization rewrites netmask pairs to CIDR and collapses
//! whitespace; it is idempotent.

use serde::{Deserialize, Serialize};

use super::TestbedError;
use crate::metrics::{normalize_line, LineKind, NormalizationRules};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGrammar {
    templates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Keyword(String),
    Slot(SlotKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Word,
    U32,
    Ipv4,
    Ipv4Cidr,
    Rest,
}

impl SlotKind {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "word" => Some(SlotKind::Word),
            "u32" => Some(SlotKind::U32),
            "ipv4" => Some(SlotKind::Ipv4),
            "ipv4cidr" => Some(SlotKind::Ipv4Cidr),
            "rest" => Some(SlotKind::Rest),
            _ => None,
        }
    }

    fn accepts(&self, token: &str) -> bool {
        match self {
            SlotKind::Word => !token.is_empty(),
            SlotKind::U32 => token.parse::<u32>().is_ok(),
            SlotKind::Ipv4 => is_ipv4(token),
            SlotKind::Ipv4Cidr => match token.split_once('/') {
                Some((addr, len)) => {
                    is_ipv4(addr) && len.parse::<u8>().map(|l| l <= 32).unwrap_or(false)
                }
                None => false,
            },
            SlotKind::Rest => true,
        }
    }
}

fn is_ipv4(token: &str) -> bool {
    let parts: Vec<&str> = token.split('.').collect();
    parts.len() == 4
        && parts
            .iter()
            .all(|p| p.parse::<u8>().is_ok() && !p.is_empty())
}

#[derive(Debug, Clone)]
struct Template {
    raw: String,
    tokens: Vec<Token>,
}

/// Line-oriented CLI grammar. Each line must match exactly one template; the
/// first keyword disambiguates, so templates are checked in declaration order
/// against the longest keyword prefix first.
#[derive(Debug, Clone)]
pub struct DutCliGrammar {
    templates: Vec<Template>,
    normalization: NormalizationRules,
}

impl DutCliGrammar {
    pub fn from_json(json: &str) -> Result<Self, TestbedError> {
        let raw: RawGrammar =
            serde_json::from_str(json).map_err(|e| TestbedError::InvalidGrammar(e.to_string()))?;
        Self::from_templates(raw.templates)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TestbedError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| TestbedError::InvalidGrammar(format!("{}: {e}", path.display())))?;
        Self::from_json(&raw)
    }

    pub fn from_templates(template_lines: Vec<String>) -> Result<Self, TestbedError> {
        let mut templates = Vec::new();
        for line in template_lines {
            let mut tokens = Vec::new();
            for part in line.split_whitespace() {
                if let Some(name) = part.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
                    let kind = SlotKind::parse(name).ok_or_else(|| {
                        TestbedError::InvalidGrammar(format!("unknown slot `{name}` in `{line}`"))
                    })?;
                    if kind == SlotKind::Rest
                        && part != line.split_whitespace().last().unwrap_or("")
                    {
                        return Err(TestbedError::InvalidGrammar(format!(
                            "`{{rest}}` must be the final token in `{line}`"
                        )));
                    }
                    tokens.push(Token::Slot(kind));
                } else {
                    tokens.push(Token::Keyword(part.to_lowercase()));
                }
            }
            if tokens.is_empty() {
                return Err(TestbedError::InvalidGrammar("empty template".to_string()));
            }
            templates.push(Template { raw: line, tokens });
        }
        // longest keyword prefix first so "router ospf {u32}" wins over a
        // hypothetical "router {word}"
        templates.sort_by_key(|t| {
            std::cmp::Reverse(
                t.tokens
                    .iter()
                    .take_while(|tok| matches!(tok, Token::Keyword(_)))
                    .count(),
            )
        });
        Ok(Self {
            templates,
            normalization: NormalizationRules::default(),
        })
    }

    /// Canonical form of a config line: whitespace collapsed, equivalence
    /// rules applied (netmask pairs become CIDR).
    pub fn normalize_line(&self, line: &str) -> String {
        normalize_line(line, LineKind::Config, &self.normalization)
            .unwrap_or_else(|| line.trim().to_string())
    }

    /// Parses one normalized line. `Err` carries the rejection reason.
    pub fn parse_line(&self, line: &str) -> Result<(), String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            return Ok(());
        }
        let mut keyword_seen = false;
        for template in &self.templates {
            match match_template(template, &words) {
                MatchOutcome::Full => return Ok(()),
                MatchOutcome::KeywordMatched => keyword_seen = true,
                MatchOutcome::No => {}
            }
        }
        if keyword_seen {
            Err("invalid input".to_string())
        } else {
            Err("unknown command".to_string())
        }
    }

    pub fn template_count(&self) -> usize {
        self.templates.len()
    }

    pub fn template_lines(&self) -> Vec<&str> {
        self.templates.iter().map(|t| t.raw.as_str()).collect()
    }
}

enum MatchOutcome {
    Full,
    /// The leading keywords matched but a slot or arity check failed; the
    /// command exists with bad arguments.
    KeywordMatched,
    No,
}

fn match_template(template: &Template, words: &[&str]) -> MatchOutcome {
    let mut wi = 0usize;
    let mut keywords_matched = 0usize;
    for token in &template.tokens {
        match token {
            Token::Keyword(k) => {
                if wi < words.len() && words[wi].to_lowercase() == *k {
                    keywords_matched += 1;
                    wi += 1;
                } else {
                    return if keywords_matched > 0
                        && template
                            .tokens
                            .iter()
                            .take_while(|t| matches!(t, Token::Keyword(_)))
                            .count()
                            == keywords_matched
                    {
                        MatchOutcome::KeywordMatched
                    } else {
                        MatchOutcome::No
                    };
                }
            }
            Token::Slot(SlotKind::Rest) => {
                return if wi < words.len() {
                    MatchOutcome::Full
                } else {
                    MatchOutcome::KeywordMatched
                };
            }
            Token::Slot(kind) => {
                if wi < words.len() && kind.accepts(words[wi]) {
                    wi += 1;
                } else {
                    return MatchOutcome::KeywordMatched;
                }
            }
        }
    }
    if wi == words.len() {
        MatchOutcome::Full
    } else {
        MatchOutcome::KeywordMatched
    }
}
