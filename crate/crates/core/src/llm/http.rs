use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{Completion, CompletionBackend, EndpointConfig, FinishReason, LlmError, Usage};
use crate::prompt::RenderedPrompt;

/// Chat-completions client: one user message per request, no system prompt.
///
/// Transport failures, 429 and 5xx responses are retried with exponential
/// backoff; 401/403 fail immediately.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: Client,
    max_attempts: u32,
    base_delay: Duration,
}

impl HttpBackend {
    pub fn new(request_timeout: Duration) -> Result<Self, LlmError> {
        let client = Client::builder()
            .timeout(request_timeout)
            .build()
            .map_err(|e| LlmError::Protocol(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            client,
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        })
    }

    pub fn with_retry(mut self, max_attempts: u32, base_delay: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.base_delay = base_delay;
        self
    }

    fn api_key(config: &EndpointConfig) -> Result<Option<String>, LlmError> {
        if config.api_key_env.is_empty() {
            return Ok(None);
        }
        std::env::var(&config.api_key_env)
            .map(Some)
            .map_err(|_| LlmError::Auth(format!("environment variable {} is not set", config.api_key_env)))
    }

    fn send_once(&self, url: &str, body: &Value, key: Option<&str>) -> Result<Value, LlmError> {
        let mut req = self.client.post(url).json(body);
        if let Some(key) = key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Network {
            message: e.to_string(),
            attempts: 1,
        })?;
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(LlmError::Auth(format!("{status}: {text}")));
        }
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(LlmError::Network {
                message: format!("{status}: {text}"),
                attempts: 1,
            });
        }
        if !status.is_success() {
            return Err(LlmError::Protocol(format!("{status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| LlmError::Protocol(format!("invalid JSON body: {e}")))
    }
}

fn parse_completion(body: &Value) -> Result<Completion, LlmError> {
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::Protocol("response has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let mut finish_reason = FinishReason::from_wire(choice.get("finish_reason").and_then(Value::as_str));
    if text.is_empty() {
        finish_reason = FinishReason::Other;
    }
    let usage = body.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok(Completion {
        text,
        finish_reason,
        prompt_digest: String::new(),
        usage,
    })
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, prompt: &RenderedPrompt, config: &EndpointConfig) -> Result<Completion, LlmError> {
        let key = Self::api_key(config)?;
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": config.model_id,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        });
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send_once(&url, &body, key.as_deref()) {
                Ok(value) => {
                    let mut c = parse_completion(&value)?;
                    c.prompt_digest = super::prompt_digest(&prompt.text);
                    return Ok(c);
                }
                Err(LlmError::Network { message, .. }) if attempt < self.max_attempts => {
                    let delay = self.base_delay * 2u32.pow(attempt - 1);
                    log::warn!("request to {url} failed ({message}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(LlmError::Network { message, .. }) => {
                    return Err(LlmError::Network {
                        message,
                        attempts: attempt,
                    })
                }
                Err(other) => return Err(other),
            }
        }
    }
}
