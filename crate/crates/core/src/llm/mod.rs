//! Completion backends and the caching client in front of them.

mod cache;
mod extract;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::RenderedPrompt;
use crate::util::sha256_hex;

pub use cache::ResponseCache;
pub use extract::{detect_degenerate_loop, extract_code, Extraction, ExtractError, GeneratedCode, LoopDetector};
pub use http::HttpBackend;
pub use mock::{MockBackend, MockMatch, MockRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_id: String,
    /// Environment variable holding the API key. Empty means no key is sent.
    pub api_key_env: String,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Seconds.
    pub request_timeout: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model_id: "default".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_tokens: 4096,
            temperature: 0.0,
            request_timeout: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    #[default]
    Stop,
    /// The completion hit `max_tokens`.
    Length,
    Other,
}

impl FinishReason {
    pub fn from_wire(reason: Option<&str>) -> Self {
        match reason {
            Some("stop") | Some("eos") | Some("end_turn") => FinishReason::Stop,
            Some("length") | Some("max_tokens") => FinishReason::Length,
            _ => FinishReason::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
    /// SHA-256 of the prompt text, hex encoded.
    pub prompt_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

pub fn prompt_digest(text: &str) -> String {
    sha256_hex(text.as_bytes())
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("network error after {attempts} attempt(s): {message}")]
    Network { message: String, attempts: u32 },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("endpoint returned an unusable response: {0}")]
    Protocol(String),
    #[error("mock fixture has no response for call {call} (question {question:?}, attempt {attempt})")]
    MockExhausted {
        call: usize,
        question: String,
        attempt: usize,
    },
    #[error("mock fixture {path}: {reason}")]
    MockFixture { path: String, reason: String },
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Network { .. })
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &RenderedPrompt, config: &EndpointConfig) -> Result<Completion, LlmError>;
}

/// Backend plus response cache. Shareable across worker threads.
pub struct LlmClient {
    backend: Arc<dyn CompletionBackend>,
    config: EndpointConfig,
    cache: ResponseCache,
    backend_calls: AtomicUsize,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn CompletionBackend>, config: EndpointConfig, cache: ResponseCache) -> Self {
        Self {
            backend,
            config,
            cache,
            backend_calls: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Requests that actually reached the backend (cache misses).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<Completion, LlmError> {
        let digest = prompt_digest(&prompt.text);
        let key = ResponseCache::key(&self.config, &digest);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        self.backend_calls.fetch_add(1, Ordering::SeqCst);
        let mut completion = self.backend.complete(prompt, &self.config)?;
        completion.prompt_digest = digest;
        self.cache.put(&key, &completion);
        Ok(completion)
    }
}
