//! Code-generation and error-correction prompts.
//!
//! Both templates live in `templates/` and are embedded at compile time. Slots
//! are `{question}`, `{schema}`, `{dataset_name}`, `{history}` and
//! `{error_msg}`; substitution is a single left-to-right pass, so braces inside
//! substituted values are never expanded again.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CODEGEN_TEMPLATE: &str = include_str!("../templates/codegen.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../templates/repair.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptKind {
    Codegen,
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub kind: PromptKind,
    pub question: String,
    pub dataset_id: String,
    /// Number of (code, error) pairs embedded; 0 for code generation.
    pub history_len: usize,
}

/// One failed attempt as shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedAttempt {
    pub code: String,
    pub error: String,
}

impl FailedAttempt {
    pub fn new(code: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            error: error.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("a repair prompt needs at least one failed attempt")]
    EmptyHistory,
}

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + slots.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = tail.find('}').and_then(|close| {
            let name = &tail[1..close];
            slots.iter().find(|(slot, _)| *slot == name).map(|(_, value)| (close, *value))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_codegen_prompt(question: &str, schema_text: &str, dataset_id: &str) -> RenderedPrompt {
    let text = fill(
        CODEGEN_TEMPLATE,
        &[("question", question), ("schema", schema_text), ("dataset_name", dataset_id)],
    );
    RenderedPrompt {
        text,
        kind: PromptKind::Codegen,
        question: question.to_string(),
        dataset_id: dataset_id.to_string(),
        history_len: 0,
    }
}

/// Lists every failed attempt as `code/error,` in attempt order, then repeats
/// the most recent error on the `Error:` line.
pub fn build_repair_prompt(
    question: &str,
    schema_text: &str,
    dataset_id: &str,
    history: &[FailedAttempt],
) -> Result<RenderedPrompt, PromptError> {
    let latest = history.last().ok_or(PromptError::EmptyHistory)?;
    let listing = history
        .iter()
        .map(|a| format!("{}/{},", a.code, a.error))
        .collect::<Vec<_>>()
        .join("\n");
    let text = fill(
        REPAIR_TEMPLATE,
        &[
            ("question", question),
            ("schema", schema_text),
            ("dataset_name", dataset_id),
            ("history", &listing),
            ("error_msg", &latest.error),
        ],
    );
    Ok(RenderedPrompt {
        text,
        kind: PromptKind::Repair,
        question: question.to_string(),
        dataset_id: dataset_id.to_string(),
        history_len: history.len(),
    })
}
