//! HTTPS chat-completions provider.

use std::time::Duration;

use serde_json::{json, Value};

use super::provider::{CompletionProvider, CompletionRequest, ProviderError};
use super::LlmError;

pub const API_KEY_ENV: &str = "LEGIGPT_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteSettings {
    pub base_url: String,
    pub model: String,
    pub timeout: Duration,
}

impl Default for RemoteSettings {
    fn default() -> Self {
        Self { base_url: "https://api.openai.com/v1".into(), model: "gpt-4".into(), timeout: Duration::from_secs(120) }
    }
}

pub struct RemoteProvider {
    settings: RemoteSettings,
    api_key: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    /// Reads the key from the environment.
    pub fn from_env(settings: RemoteSettings) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty()).ok_or(LlmError::MissingApiKey)?;
        Ok(Self::new(settings, key))
    }

    pub fn new(settings: RemoteSettings, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(settings.timeout)).build().into();
        Self { settings, api_key, agent }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.settings.base_url.trim_end_matches('/'))
    }
}

/// Extracts `choices[0].message.content` from a response body.
pub fn response_content(body: &Value) -> Option<&str> {
    body.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl CompletionProvider for RemoteProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.settings.model,
            "messages": [{ "role": "user", "content": request.prompt }],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "top_p": request.top_p,
        });
        let mut resp = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) if (400..500).contains(&code) && code != 429 => {
                    ProviderError::fatal(format!("HTTP {code}"))
                }
                other => ProviderError::retryable(other.to_string()),
            })?;
        let value: Value = resp.body_mut().read_json().map_err(|e| ProviderError::retryable(e.to_string()))?;
        response_content(&value)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::retryable("response has no choices[0].message.content"))
    }

    fn name(&self) -> &str {
        "remote"
    }
}
