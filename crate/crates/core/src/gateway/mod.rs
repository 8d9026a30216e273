//! Uniform completion interface for every agent: prompt templating,
//! schema-validated structured output with bounded repair, and deterministic
//! record/replay for offline testing.

mod backend;
mod schema;
mod template;
mod transcript;

pub use backend::{Clock, CompletionBackend, LiveBackend};
pub use schema::{extract_json, FieldSchema, Schema};
pub use template::PromptTemplate;
pub use transcript::{normalize_prompt, request_hash, Exchange, Transcript};

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_REPAIRS: u32 = 3;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("output failed schema validation after {attempts} attempt(s): {message}")]
    SchemaViolation { message: String, attempts: u32 },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("replay miss: no recorded response for hash {hash} (prompt starts {prompt_head:?})")]
    ReplayMiss { hash: String, prompt_head: String },
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error("invalid backend descriptor: {0}")]
    InvalidDescriptor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    Live,
    Replay,
    Record,
}

/// Where completions come from and how they are parameterized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub mode: BackendMode,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_name: String,
    #[serde(default)]
    pub transcript_path: Option<PathBuf>,
    #[serde(default)]
    pub temperature: f64,
}

impl BackendDescriptor {
    pub fn replay(transcript_path: impl Into<PathBuf>) -> Self {
        Self {
            mode: BackendMode::Replay,
            endpoint: None,
            model_name: "replay".to_string(),
            transcript_path: Some(transcript_path.into()),
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.mode {
            BackendMode::Replay | BackendMode::Record => {
                if self.transcript_path.is_none() {
                    return Err(GatewayError::InvalidDescriptor(format!(
                        "{:?} mode requires transcript_path",
                        self.mode
                    )));
                }
            }
            BackendMode::Live => {}
        }
        if matches!(self.mode, BackendMode::Live | BackendMode::Record) && self.endpoint.is_none() {
            return Err(GatewayError::InvalidDescriptor(format!(
                "{:?} mode requires endpoint",
                self.mode
            )));
        }
        Ok(())
    }
}

/// Result of a structured completion: the validated value plus how many
/// repair round-trips it took.
#[derive(Debug, Clone)]
pub struct StructuredCompletion {
    pub value: serde_json::Value,
    pub repairs: u32,
}

enum Inner {
    Direct(Box<dyn CompletionBackend>),
    Replay(ReplayState),
    Record {
        inner: Box<dyn CompletionBackend>,
        path: PathBuf,
        clock: Clock,
        write_lock: Mutex<()>,
    },
}

struct ReplayState {
    /// hash -> ordered queue of recorded responses; duplicate hashes are
    /// served in recording order, and an exhausted queue repeats its last
    /// response.
    queues: Mutex<std::collections::BTreeMap<String, ReplayQueue>>,
}

struct ReplayQueue {
    responses: Vec<String>,
    cursor: usize,
}

/// Completion gateway. Cheap to share by reference; all methods take `&self`
/// and internal cursors are serialized.
pub struct Gateway {
    inner: Inner,
    calls: AtomicU64,
}

impl Gateway {
    /// Builds a gateway from a descriptor. Replay loads the transcript
    /// eagerly; record appends to it; live speaks the HTTP chat-completion
    /// protocol.
    pub fn from_descriptor(desc: &BackendDescriptor) -> Result<Self, GatewayError> {
        desc.validate()?;
        match desc.mode {
            BackendMode::Replay => Self::replay(desc.transcript_path.as_ref().expect("validated")),
            BackendMode::Record => {
                let live = LiveBackend::from_descriptor(desc)?;
                Ok(Self::record(
                    Box::new(live),
                    desc.transcript_path.clone().expect("validated"),
                    Clock::System,
                ))
            }
            BackendMode::Live => {
                let live = LiveBackend::from_descriptor(desc)?;
                Ok(Self::with_backend(Box::new(live)))
            }
        }
    }

    /// Replays a recorded transcript; lookups are by normalized-prompt hash.
    pub fn replay(path: impl AsRef<std::path::Path>) -> Result<Self, GatewayError> {
        let transcript = Transcript::load(path.as_ref())?;
        let mut queues: std::collections::BTreeMap<String, ReplayQueue> = Default::default();
        for exchange in transcript.exchanges {
            queues
                .entry(exchange.request_hash)
                .or_insert_with(|| ReplayQueue {
                    responses: Vec::new(),
                    cursor: 0,
                })
                .responses
                .push(exchange.response);
        }
        Ok(Self {
            inner: Inner::Replay(ReplayState {
                queues: Mutex::new(queues),
            }),
            calls: AtomicU64::new(0),
        })
    }

    /// Records every exchange through `inner` into a transcript file.
    pub fn record(inner: Box<dyn CompletionBackend>, path: PathBuf, clock: Clock) -> Self {
        Self {
            inner: Inner::Record {
                inner,
                path,
                clock,
                write_lock: Mutex::new(()),
            },
            calls: AtomicU64::new(0),
        }
    }

    /// Wraps a backend directly, without record/replay bookkeeping.
    pub fn with_backend(inner: Box<dyn CompletionBackend>) -> Self {
        Self {
            inner: Inner::Direct(inner),
            calls: AtomicU64::new(0),
        }
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match &self.inner {
            Inner::Direct(backend) => backend.complete(prompt),
            Inner::Replay(state) => {
                let hash = request_hash(prompt);
                let mut queues = state.queues.lock().expect("replay cursor poisoned");
                match queues.get_mut(&hash) {
                    Some(queue) => {
                        let idx = queue.cursor.min(queue.responses.len() - 1);
                        if queue.cursor < queue.responses.len() {
                            queue.cursor += 1;
                        }
                        Ok(queue.responses[idx].clone())
                    }
                    None => Err(GatewayError::ReplayMiss {
                        hash,
                        prompt_head: prompt.chars().take(80).collect(),
                    }),
                }
            }
            Inner::Record {
                inner,
                path,
                clock,
                write_lock,
            } => {
                let response = inner.complete(prompt)?;
                let exchange = Exchange {
                    request_hash: request_hash(prompt),
                    prompt: prompt.to_string(),
                    response: response.clone(),
                    timestamp: clock.now(),
                };
                let _guard = write_lock.lock().expect("transcript writer poisoned");
                Transcript::append(path, &exchange)?;
                Ok(response)
            }
        }
    }

    /// Completes with schema validation. On failure the validation error is
    /// appended to the prompt and the backend is re-asked, up to
    /// `max_repairs` times; total backend calls never exceed 1 + max_repairs.
    pub fn complete_structured(
        &self,
        prompt: &str,
        schema: &Schema,
        max_repairs: u32,
    ) -> Result<StructuredCompletion, GatewayError> {
        let mut last_error = String::new();
        for attempt in 0..=max_repairs {
            let current = if attempt == 0 {
                prompt.to_string()
            } else {
                format!(
                    "{prompt}\n\nYour previous response failed validation: {last_error}\n\
                     Respond again with a single JSON value and strictly follow the JSON format."
                )
            };
            let response = self.complete(&current)?;
            match extract_json(&response) {
                Some(value) => match schema.validate(&value) {
                    Ok(()) => {
                        return Ok(StructuredCompletion {
                            value,
                            repairs: attempt,
                        })
                    }
                    Err(e) => last_error = e,
                },
                None => last_error = "no JSON value found in response".to_string(),
            }
        }
        Err(GatewayError::SchemaViolation {
            message: last_error,
            attempts: max_repairs + 1,
        })
    }
}
