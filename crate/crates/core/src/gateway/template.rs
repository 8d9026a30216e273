//! Prompt templates with named `{slot}` markers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;

use super::GatewayError;

static SLOT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([a-z_][a-z0-9_]*)\}").expect("static regex"));

/// A prompt body with named slots. The required slot set is derived from the
/// body, so a template and its contract cannot drift apart.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub template_id: String,
    pub body: String,
    pub required_slots: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn new(template_id: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let required_slots = SLOT_RE
            .captures_iter(&body)
            .map(|c| c[1].to_string())
            .collect();
        Self {
            template_id: template_id.into(),
            body,
            required_slots,
        }
    }

    /// Renders the template. Deterministic for identical inputs; fails if any
    /// required slot is unbound or any slot marker would survive rendering.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        for slot in &self.required_slots {
            if !bindings.contains_key(slot) {
                return Err(GatewayError::MissingSlot(slot.clone()));
            }
        }
        let rendered = SLOT_RE.replace_all(&self.body, |caps: &regex::Captures<'_>| {
            bindings
                .get(&caps[1])
                .cloned()
                .unwrap_or_else(|| caps[0].to_string())
        });
        if let Some(caps) = SLOT_RE.captures(&rendered) {
            // a binding value introduced a marker-looking token; treat it as
            // literal text only when it came from a binding, not the body
            let from_bindings = bindings.values().any(|v| v.contains(&caps[0]));
            if !from_bindings {
                return Err(GatewayError::MissingSlot(caps[1].to_string()));
            }
        }
        Ok(rendered.into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn renders_hello_world() {
        let t = PromptTemplate::new("t", "Hello {x}");
        assert_eq!(t.render(&bind(&[("x", "world")])).unwrap(), "Hello world");
    }

    #[test]
    fn missing_slot_errors() {
        let t = PromptTemplate::new("t", "Hello {x} and {y}");
        match t.render(&bind(&[("x", "a")])) {
            Err(GatewayError::MissingSlot(s)) => assert_eq!(s, "y"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_braces_are_not_slots() {
        let t = PromptTemplate::new("t", "Respond as {\"key\": \"value\"} for {x}");
        let out = t.render(&bind(&[("x", "it")])).unwrap();
        assert!(out.contains("{\"key\": \"value\"}"));
    }

    #[test]
    fn derived_slots_match_body() {
        let t = PromptTemplate::new("t", "{a} {b} {a}");
        assert_eq!(
            t.required_slots.iter().cloned().collect::<Vec<_>>(),
            vec!["a".to_string(), "b".to_string()]
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = PromptTemplate::new("t", "{a}-{b}");
        let b = bind(&[("a", "1"), ("b", "2")]);
        assert_eq!(t.render(&b).unwrap(), t.render(&b).unwrap());
    }
}
