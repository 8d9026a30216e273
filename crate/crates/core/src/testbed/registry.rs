//! Tester API registry: the callable surface of the simulated tester.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TestbedError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(default)]
    pub pattern: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiEntry {
    pub name: String,
    pub arity: usize,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    pub effect: String,
}

#[derive(Debug, Clone)]
pub struct TesterApiRegistry {
    entries: BTreeMap<String, ApiEntry>,
}

impl TesterApiRegistry {
    pub fn from_json(json: &str) -> Result<Self, TestbedError> {
        let list: Vec<ApiEntry> =
            serde_json::from_str(json).map_err(|e| TestbedError::InvalidRegistry(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for entry in list {
            for p in &entry.params {
                if let Some(pattern) = &p.pattern {
                    regex::Regex::new(pattern).map_err(|e| {
                        TestbedError::InvalidRegistry(format!("{}.{}: {e}", entry.name, p.name))
                    })?;
                }
            }
            if entries.insert(entry.name.clone(), entry).is_some() {
                return Err(TestbedError::InvalidRegistry(
                    "duplicate API name".to_string(),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TestbedError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| TestbedError::InvalidRegistry(format!("{}: {e}", path.display())))?;
        Self::from_json(&raw)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&ApiEntry> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn api_names(&self) -> Vec<&str> {
        self.entries.keys().map(|k| k.as_str()).collect()
    }

    /// Documentation block for prompts and knowledge-base payloads.
    pub fn describe(&self) -> String {
        self.entries
            .values()
            .map(|e| {
                let params = e
                    .params
                    .iter()
                    .map(|p| p.name.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                format!("- {} {}: {}", e.name, params, e.effect)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Validates one normalized call line: registered name, exact arity,
    /// per-parameter patterns. Returns the API name on success.
    pub fn check_call<'a>(&self, line: &'a str) -> Result<&'a str, String> {
        let mut words = line.split_whitespace();
        let Some(name) = words.next() else {
            return Err("empty call".to_string());
        };
        let args: Vec<&str> = words.collect();
        let Some(entry) = self.entries.get(name) else {
            return Err("unsupported command".to_string());
        };
        if args.len() != entry.arity {
            return Err(format!(
                "arity mismatch: {} takes {} argument(s), got {}",
                name,
                entry.arity,
                args.len()
            ));
        }
        for (i, param) in entry.params.iter().enumerate() {
            if let (Some(pattern), Some(arg)) = (&param.pattern, args.get(i)) {
                let re = regex::Regex::new(pattern).expect("validated at load");
                if !re.is_match(arg) {
                    return Err(format!(
                        "bad argument `{}` for {}.{}",
                        arg, name, param.name
                    ));
                }
            }
        }
        Ok(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> TesterApiRegistry {
        TesterApiRegistry::from_json(crate::datafiles::TESTER_API).unwrap()
    }

    #[test]
    fn accepts_valid_calls() {
        let r = registry();
        assert!(r.check_call("reserve_port p1").is_ok());
        assert!(r.check_call("send_packets p2 100").is_ok());
        assert!(r.check_call("set_field p1 metric 16").is_ok());
    }

    #[test]
    fn rejects_unknown_arity_and_bad_args() {
        let r = registry();
        assert_eq!(
            r.check_call("warp_core p1"),
            Err("unsupported command".to_string())
        );
        assert!(r.check_call("reserve_port").unwrap_err().contains("arity"));
        assert!(r
            .check_call("send_packets p1 lots")
            .unwrap_err()
            .contains("bad argument"));
    }
}
