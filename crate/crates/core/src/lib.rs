//! Zero-shot question answering over tabular data via generated analysis code.
//!
//! The pipeline turns a natural-language question into a pandas script with an
//! LLM, runs the script in an external sandbox runner, feeds failures back to
//! the model for repair, and scores the printed answers against typed gold
//! labels.
//!
//! Module map:
//! - [`ingest`]: dataset loading, column-name normalization and deduplication
//! - [`schema`]: per-column summaries rendered as the prompt's schema block
//! - [`prompt`]: code-generation and error-correction prompt templates
//! - [`llm`]: completion backends (HTTP, scripted mock), response cache,
//!   code extraction and degenerate-loop detection
//! - [`exec`]: executor backends, timeouts and error classification
//! - [`pipeline`]: the generate/execute/repair loop and batch runner
//! - [`answers`]: typed answer parsing, comparison and accuracy
//! - [`report`]: error-evolution tables and transition flows

pub mod answers;
pub mod exec;
pub mod ingest;
pub mod llm;
pub mod pipeline;
pub mod prompt;
mod pyrepr;
pub mod report;
pub mod schema;
mod util;

pub use answers::{AnswerType, GoldRecord, TypedAnswer};
pub use exec::{ErrorClass, ErrorTag, ExecutionOutcome, Orchestrator, OutcomeCache};
pub use ingest::{Cell, DataDir, DatasetTable, Variant};
pub use llm::{Completion, EndpointConfig, FinishReason, GeneratedCode, LlmClient};
pub use pipeline::{AttemptRecord, Pipeline, PipelineConfig, RunRecord, RunStatus, Task};
pub use prompt::{PromptKind, RenderedPrompt};
pub use schema::{ColumnSchema, DatasetSchema};
