use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PromptInstance;
use crate::error::BackendError;

/// Request body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub input: String,
    pub prompt: String,
    pub soft_tokens: usize,
}

impl From<&PromptInstance> for GenerateRequest {
    fn from(p: &PromptInstance) -> Self {
        GenerateRequest {
            input: p.input_text.clone(),
            prompt: p.prompt_text.clone(),
            soft_tokens: p.soft_token_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub output: String,
}

/// Blocking client for a generation service.
#[derive(Debug, Clone)]
pub struct GeneratorClient {
    url: String,
    client: reqwest::blocking::Client,
}

impl GeneratorClient {
    /// `endpoint` is the service base URL; `/generate` is appended unless
    /// already present.
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, BackendError> {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/generate") {
            base.to_owned()
        } else {
            format!("{base}/generate")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .connect_timeout(timeout)
            .build()
            .map_err(|e| BackendError::Other(e.to_string()))?;
        Ok(GeneratorClient { url, client })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Sends one prompt and returns the service's `output` verbatim.
    pub fn generate(&self, instance: &PromptInstance) -> Result<String, BackendError> {
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                BackendError::Timeout { url: self.url.clone() }
            } else if e.is_connect() {
                BackendError::Connect {
                    url: self.url.clone(),
                    message: e.to_string(),
                }
            } else {
                BackendError::Other(e.to_string())
            }
        };
        let response = self
            .client
            .post(&self.url)
            .json(&GenerateRequest::from(instance))
            .send()
            .map_err(classify)?;
        let status = response.status();
        let body = response.text().map_err(classify)?;
        if !status.is_success() {
            let message = serde_json::from_str::<serde_json::Value>(&body)
                .ok()
                .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_owned))
                .unwrap_or(body);
            return Err(BackendError::Status {
                status: status.as_u16(),
                message,
            });
        }
        let value: serde_json::Value = serde_json::from_str(&body).map_err(|_| BackendError::MissingOutput)?;
        match value.get("output") {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            _ => Err(BackendError::MissingOutput),
        }
    }
}
