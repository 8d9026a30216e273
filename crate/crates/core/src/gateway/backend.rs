//! Completion backends. The live backend speaks the HTTP chat-completion wire
//! protocol (message list in, message out).

use serde_json::json;

use super::{BackendDescriptor, GatewayError};

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError>;

    fn name(&self) -> &str {
        "backend"
    }
}

/// Timestamp source for recorded exchanges. Fixture recording uses a fixed
/// clock so regenerated transcripts are byte-stable.
#[derive(Debug, Clone)]
pub enum Clock {
    System,
    Fixed(String),
}

impl Clock {
    pub fn now(&self) -> String {
        match self {
            Clock::Fixed(s) => s.clone(),
            Clock::System => {
                let since_epoch = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .unwrap_or_default();
                format!("{}", since_epoch.as_secs())
            }
        }
    }
}

/// HTTP chat-completion client. Endpoint and key come from the descriptor or
/// the `PROTOFORGE_ENDPOINT` / `PROTOFORGE_API_KEY` environment variables.
pub struct LiveBackend {
    endpoint: String,
    api_key: Option<String>,
    model_name: String,
    temperature: f64,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn from_descriptor(desc: &BackendDescriptor) -> Result<Self, GatewayError> {
        let endpoint = desc
            .endpoint
            .clone()
            .or_else(|| std::env::var("PROTOFORGE_ENDPOINT").ok())
            .ok_or_else(|| {
                GatewayError::InvalidDescriptor(
                    "live backend needs an endpoint (descriptor or PROTOFORGE_ENDPOINT)".into(),
                )
            })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(300))
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(Self {
            endpoint,
            api_key: std::env::var("PROTOFORGE_API_KEY").ok(),
            model_name: desc.model_name.clone(),
            temperature: desc.temperature,
            client,
        })
    }
}

impl CompletionBackend for LiveBackend {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(GatewayError::BackendUnavailable(format!(
                "endpoint returned {}",
                response.status()
            )));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| {
                GatewayError::BackendUnavailable(
                    "response missing choices[0].message.content".into(),
                )
            })
    }

    fn name(&self) -> &str {
        &self.model_name
    }
}
