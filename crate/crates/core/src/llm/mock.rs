//! Scripted completions for offline runs.
//!
//! A fixture is a JSON file, a JSON-lines file, or a directory of them read in
//! file-name order. Each record is
//!
//! ```json
//! {"match": ..., "text": "...", "finish_reason": "stop"}
//! ```
//!
//! where `match` is a prompt digest (string), a zero-based call index
//! (number), or `{"question": "...", "attempt": n}` for the n-th attempt at a
//! question. Digest matches win over question matches, which win over call
//! indices.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{prompt_digest, Completion, CompletionBackend, EndpointConfig, FinishReason, LlmError, Usage};
use crate::prompt::RenderedPrompt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockMatch {
    Sequence(usize),
    Digest(String),
    Turn { question: String, attempt: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRecord {
    #[serde(rename = "match")]
    pub matcher: MockMatch,
    pub text: String,
    #[serde(default)]
    pub finish_reason: FinishReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

#[derive(Debug, Default)]
pub struct MockBackend {
    records: Vec<MockRecord>,
    calls: AtomicUsize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<MockRecord>),
    One(MockRecord),
}

impl MockBackend {
    pub fn new(records: Vec<MockRecord>) -> Self {
        Self {
            records,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, LlmError> {
        let mut files = Vec::new();
        if path.is_dir() {
            let entries = std::fs::read_dir(path).map_err(|e| fixture_err(path, e))?;
            for entry in entries {
                let p = entry.map_err(|e| fixture_err(path, e))?.path();
                if matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "jsonl")) {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut records = Vec::new();
        for file in &files {
            let text = std::fs::read_to_string(file).map_err(|e| fixture_err(file, e))?;
            if file.extension().and_then(|e| e.to_str()) == Some("jsonl") {
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    records.push(serde_json::from_str(line).map_err(|e| fixture_err(file, e))?);
                }
            } else {
                match serde_json::from_str(&text).map_err(|e| fixture_err(file, e))? {
                    OneOrMany::Many(many) => records.extend(many),
                    OneOrMany::One(one) => records.push(one),
                }
            }
        }
        Ok(Self::new(records))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn records(&self) -> &[MockRecord] {
        &self.records
    }

    fn lookup(&self, prompt: &RenderedPrompt, call: usize) -> Option<&MockRecord> {
        let digest = prompt_digest(&prompt.text);
        let attempt = prompt.history_len + 1;
        let find = |pred: &dyn Fn(&MockMatch) -> bool| self.records.iter().find(|r| pred(&r.matcher));
        find(&|m| matches!(m, MockMatch::Digest(d) if *d == digest))
            .or_else(|| {
                find(&|m| matches!(m, MockMatch::Turn { question, attempt: a } if *question == prompt.question && *a == attempt))
            })
            .or_else(|| find(&|m| matches!(m, MockMatch::Sequence(i) if *i == call)))
    }
}

fn fixture_err(path: &Path, e: impl ToString) -> LlmError {
    LlmError::MockFixture {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, prompt: &RenderedPrompt, _config: &EndpointConfig) -> Result<Completion, LlmError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let record = self.lookup(prompt, call).ok_or_else(|| LlmError::MockExhausted {
            call,
            question: prompt.question.clone(),
            attempt: prompt.history_len + 1,
        })?;
        Ok(Completion {
            text: record.text.clone(),
            finish_reason: record.finish_reason,
            prompt_digest: prompt_digest(&prompt.text),
            usage: record.usage,
        })
    }
}
