//! Pulling the script out of a completion, and spotting completions that ran
//! into the token limit while repeating themselves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Completion, FinishReason};

const FENCE: &str = "```";
const THINK_END: &str = "</think>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extraction {
    FencedBlock,
    WholeText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedCode {
    pub source: String,
    pub extraction: Extraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("model output contained no code")]
    NoCode,
}

/// First fenced block wins; the fence's language tag is ignored and an
/// unclosed fence runs to the end of the text. Anything up to the last
/// `</think>` marker is reasoning and is discarded.
pub fn extract_code(text: &str) -> Result<GeneratedCode, ExtractError> {
    let body = match text.rfind(THINK_END) {
        Some(i) => &text[i + THINK_END.len()..],
        None => text,
    };
    let (source, extraction) = match body.find(FENCE) {
        Some(open) => {
            let after = &body[open + FENCE.len()..];
            // The rest of the opening line is the language tag.
            let inner = match after.find('\n') {
                Some(nl) => &after[nl + 1..],
                None => "",
            };
            let inner = match inner.find(FENCE) {
                Some(close) => &inner[..close],
                None => inner,
            };
            (inner.trim(), Extraction::FencedBlock)
        }
        None => (body.trim(), Extraction::WholeText),
    };
    if source.is_empty() {
        return Err(ExtractError::NoCode);
    }
    Ok(GeneratedCode {
        source: source.to_string(),
        extraction,
    })
}

/// Thresholds for [`detect_degenerate_loop`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopDetector {
    /// Share of the text, counted from the end, that is inspected.
    pub tail_fraction: f64,
    /// Shortest repeating unit, in characters.
    pub min_unit: usize,
    /// Back-to-back copies of the unit needed at the end of the tail.
    pub min_repeats: usize,
}

impl Default for LoopDetector {
    fn default() -> Self {
        Self {
            tail_fraction: 0.25,
            min_unit: 20,
            min_repeats: 3,
        }
    }
}

impl LoopDetector {
    pub fn is_degenerate(&self, completion: &Completion) -> bool {
        completion.finish_reason == FinishReason::Length && self.tail_repeats(&completion.text)
    }

    /// True when the inspected tail ends with `min_repeats` consecutive copies
    /// of some unit at least `min_unit` characters long.
    pub fn tail_repeats(&self, text: &str) -> bool {
        let chars: Vec<char> = text.chars().collect();
        let tail_len = ((chars.len() as f64) * self.tail_fraction).ceil() as usize;
        let tail = &chars[chars.len() - tail_len.min(chars.len())..];
        let repeats = self.min_repeats.max(2);
        let min_unit = self.min_unit.max(1);
        for p in min_unit..=tail.len() / repeats {
            // Length of the suffix in which every char equals the one p back.
            let run = (p..tail.len()).rev().take_while(|&i| tail[i] == tail[i - p]).count();
            if run >= (repeats - 1) * p {
                return true;
            }
        }
        false
    }
}

pub fn detect_degenerate_loop(completion: &Completion) -> bool {
    LoopDetector::default().is_degenerate(completion)
}
