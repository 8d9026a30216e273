//! Deterministic stand-in for the physical tester and device under test:
//! validates configurations against a CLI grammar, replays scripts against a
//! tester-API registry, and emits execution logs with optional fault
//! injection.

mod grammar;
mod registry;

pub use grammar::DutCliGrammar;
pub use registry::{ApiEntry, TesterApiRegistry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestbedError {
    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),
    #[error("invalid API registry: {0}")]
    InvalidRegistry(String),
    #[error("invalid fault profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ConfigAccept,
    ConfigReject,
    ApiCall,
    ApiError,
    AssertionPass,
    AssertionFail,
}

impl EventKind {
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            EventKind::ConfigReject | EventKind::ApiError | EventKind::AssertionFail
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogEvent {
    pub kind: EventKind,
    /// 1-based config line or script call position.
    pub line_or_call: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub events: Vec<LogEvent>,
}

impl ExecutionLog {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &LogEvent)> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind.is_failure())
    }

    pub fn has_failures(&self) -> bool {
        self.events.iter().any(|e| e.kind.is_failure())
    }

    pub fn extend(&mut self, other: ExecutionLog) {
        self.events.extend(other.events);
    }

    pub fn write_jsonl(&self, path: &std::path::Path) -> std::io::Result<()> {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
            out.push('\n');
        }
        std::fs::write(path, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectKind {
    RejectConfig,
    FailApi,
    FailAssertion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectedFault {
    /// Regex matched against the normalized line.
    pub trigger: String,
    pub kind: InjectKind,
    pub detail: String,
}

/// Deterministic fault injection. Triggers must be unique within a profile
/// (validated at load); when several could match a line, the first wins.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FaultProfile {
    pub injected: Vec<InjectedFault>,
}

impl FaultProfile {
    pub fn from_json(json: &str) -> Result<Self, TestbedError> {
        let profile: FaultProfile =
            serde_json::from_str(json).map_err(|e| TestbedError::InvalidProfile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), TestbedError> {
        let mut seen = std::collections::BTreeSet::new();
        for fault in &self.injected {
            regex::Regex::new(&fault.trigger)
                .map_err(|e| TestbedError::InvalidProfile(format!("{}: {e}", fault.trigger)))?;
            if !seen.insert(&fault.trigger) {
                return Err(TestbedError::InvalidProfile(format!(
                    "duplicate trigger `{}`",
                    fault.trigger
                )));
            }
        }
        Ok(())
    }

    fn matching(&self, kind: InjectKind, line: &str) -> Option<&InjectedFault> {
        self.injected.iter().filter(|f| f.kind == kind).find(|f| {
            regex::Regex::new(&f.trigger)
                .map(|re| re.is_match(line))
                .unwrap_or(false)
        })
    }
}

/// A complete simulated testbed: grammar, API registry, and fault profile.
#[derive(Debug, Clone)]
pub struct Testbed {
    pub grammar: DutCliGrammar,
    pub registry: TesterApiRegistry,
    pub profile: FaultProfile,
}

impl Testbed {
    pub fn with_defaults() -> Self {
        Self {
            grammar: DutCliGrammar::from_json(crate::datafiles::DUT_GRAMMAR)
                .expect("embedded grammar valid"),
            registry: TesterApiRegistry::from_json(crate::datafiles::TESTER_API)
                .expect("embedded registry valid"),
            profile: FaultProfile::default(),
        }
    }

    /// Deploys the configuration, then runs the script. Returns the combined
    /// log and the observed api-call sequence.
    pub fn execute(&self, config: &str, script: &str) -> (ExecutionLog, Vec<String>) {
        let mut log = apply_config(config, &self.grammar, &self.profile);
        let (script_log, calls) = run_script(script, &self.registry, &self.profile);
        log.extend(script_log);
        (log, calls)
    }
}

/// Applies a configuration line by line: normalize, check injected faults,
/// then parse under the grammar. Rejections are events, not errors.
pub fn apply_config(config: &str, grammar: &DutCliGrammar, profile: &FaultProfile) -> ExecutionLog {
    let mut log = ExecutionLog::default();
    let mut line_no = 0usize;
    for raw in config.lines() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('!') || trimmed.starts_with('#') {
            continue;
        }
        line_no += 1;
        let normalized = grammar.normalize_line(trimmed);
        if let Some(fault) = profile.matching(InjectKind::RejectConfig, &normalized) {
            log.events.push(LogEvent {
                kind: EventKind::ConfigReject,
                line_or_call: line_no,
                detail: format!("{}: {}", fault.detail, normalized),
            });
            continue;
        }
        match grammar.parse_line(&normalized) {
            Ok(()) => log.events.push(LogEvent {
                kind: EventKind::ConfigAccept,
                line_or_call: line_no,
                detail: normalized,
            }),
            Err(reason) => log.events.push(LogEvent {
                kind: EventKind::ConfigReject,
                line_or_call: line_no,
                detail: format!("{reason}: {normalized}"),
            }),
        }
    }
    log
}

/// Runs a tester script: one API call per line, `expect <text>` lines are
/// assertion steps. Returns the log and the observed api-call sequence.
pub fn run_script(
    script: &str,
    registry: &TesterApiRegistry,
    profile: &FaultProfile,
) -> (ExecutionLog, Vec<String>) {
    let mut log = ExecutionLog::default();
    let mut calls = Vec::new();
    let mut position = 0usize;
    for raw in script.lines() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
            continue;
        }
        position += 1;
        let normalized = trimmed.split_whitespace().collect::<Vec<_>>().join(" ");
        if let Some(expectation) = normalized.strip_prefix("expect ") {
            if let Some(fault) = profile.matching(InjectKind::FailAssertion, &normalized) {
                log.events.push(LogEvent {
                    kind: EventKind::AssertionFail,
                    line_or_call: position,
                    detail: format!("{}: {}", fault.detail, expectation),
                });
            } else {
                log.events.push(LogEvent {
                    kind: EventKind::AssertionPass,
                    line_or_call: position,
                    detail: expectation.to_string(),
                });
            }
            continue;
        }
        if let Some(fault) = profile.matching(InjectKind::FailApi, &normalized) {
            log.events.push(LogEvent {
                kind: EventKind::ApiError,
                line_or_call: position,
                detail: format!("{}: {}", fault.detail, normalized),
            });
            continue;
        }
        match registry.check_call(&normalized) {
            Ok(name) => {
                log.events.push(LogEvent {
                    kind: EventKind::ApiCall,
                    line_or_call: position,
                    detail: normalized.clone(),
                });
                calls.push(normalized.clone());
                let _ = name;
            }
            Err(reason) => log.events.push(LogEvent {
                kind: EventKind::ApiError,
                line_or_call: position,
                detail: format!("{reason}: {normalized}"),
            }),
        }
    }
    (log, calls)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grammar() -> DutCliGrammar {
        DutCliGrammar::from_json(crate::datafiles::DUT_GRAMMAR).unwrap()
    }

    fn registry() -> TesterApiRegistry {
        TesterApiRegistry::from_json(crate::datafiles::TESTER_API).unwrap()
    }

    #[test]
    fn valid_config_all_accepts() {
        let config = "hostname dut1\ninterface eth0\nip address 10.0.0.1/24\nno shutdown\nexit\nrouter rip\nversion 2\nnetwork 10.0.0.0/24\nredistribute static\nexit\n";
        let log = apply_config(config, &grammar(), &FaultProfile::default());
        assert_eq!(log.events.len(), 10);
        assert!(log.events.iter().all(|e| e.kind == EventKind::ConfigAccept));
    }

    #[test]
    fn unknown_command_rejected_with_line() {
        let config = "hostname dut1\nip addres 10.0.0.1/24\n";
        let log = apply_config(config, &grammar(), &FaultProfile::default());
        assert_eq!(log.events[0].kind, EventKind::ConfigAccept);
        assert_eq!(log.events[1].kind, EventKind::ConfigReject);
        assert_eq!(log.events[1].line_or_call, 2);
        assert!(log.events[1].detail.contains("unknown command"));
    }

    #[test]
    fn profile_rejects_on_trigger() {
        let profile = FaultProfile {
            injected: vec![InjectedFault {
                trigger: "bgp".to_string(),
                kind: InjectKind::RejectConfig,
                detail: "injected".to_string(),
            }],
        };
        let config = "router bgp 65000\n";
        let log = apply_config(config, &grammar(), &profile);
        assert_eq!(log.events[0].kind, EventKind::ConfigReject);
        assert!(log.events[0].detail.contains("injected"));
    }

    #[test]
    fn script_of_registered_calls() {
        let script = "reserve_port p1\nstart_capture p1\nsend_packets p1 10\nstop_capture p1\nrelease_port p1\n";
        let (log, calls) = run_script(script, &registry(), &FaultProfile::default());
        assert_eq!(log.events.len(), 5);
        assert!(log.events.iter().all(|e| e.kind == EventKind::ApiCall));
        assert_eq!(calls.len(), 5);
    }

    #[test]
    fn unregistered_call_is_api_error() {
        let script = "teleport_packets p1\n";
        let (log, calls) = run_script(script, &registry(), &FaultProfile::default());
        assert_eq!(log.events[0].kind, EventKind::ApiError);
        assert!(log.events[0].detail.contains("unsupported command"));
        assert!(calls.is_empty());
    }

    #[test]
    fn profile_fails_third_assertion() {
        let script = "reserve_port p1\nexpect neighbor up\nexpect route installed\nexpect counters match baseline\n";
        let profile = FaultProfile {
            injected: vec![InjectedFault {
                trigger: "counters match".to_string(),
                kind: InjectKind::FailAssertion,
                detail: "injected mismatch".to_string(),
            }],
        };
        let (log, _) = run_script(script, &registry(), &profile);
        assert_eq!(log.events[1].kind, EventKind::AssertionPass);
        assert_eq!(log.events[2].kind, EventKind::AssertionPass);
        assert_eq!(log.events[3].kind, EventKind::AssertionFail);
        assert_eq!(log.events[3].line_or_call, 4);
    }

    #[test]
    fn determinism_same_inputs_same_log() {
        let config = "hostname a\nbogus line\n";
        let a = apply_config(config, &grammar(), &FaultProfile::default());
        let b = apply_config(config, &grammar(), &FaultProfile::default());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn log_counts_effective_lines() {
        let config = "! comment\nhostname x\n\nip address 10.0.0.1/24\n";
        let log = apply_config(config, &grammar(), &FaultProfile::default());
        assert_eq!(
            log.events.len(),
            2,
            "comments and blanks are not effective lines"
        );
    }

    #[test]
    fn duplicate_trigger_rejected() {
        let profile = FaultProfile {
            injected: vec![
                InjectedFault {
                    trigger: "x".into(),
                    kind: InjectKind::RejectConfig,
                    detail: "a".into(),
                },
                InjectedFault {
                    trigger: "x".into(),
                    kind: InjectKind::FailApi,
                    detail: "b".into(),
                },
            ],
        };
        assert!(profile.validate().is_err());
    }
}
