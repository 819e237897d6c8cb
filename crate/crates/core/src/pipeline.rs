//! The generate, execute, repair loop for one question, and a batch runner on
//! top of it.
//!
//! Attempt 1 uses the code-generation prompt. Every failed attempt (no code,
//! a degenerate completion, or an execution error) adds a (code, error) pair
//! to the history, and the next attempt uses the repair prompt with the whole
//! history, until an attempt succeeds or `1 + max_repairs` attempts are spent.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{
    classify_error, ErrorClass, ExecError, ExecutionOutcome, ExecutionRequest, Orchestrator, Stage,
};
use crate::ingest::{write_execution_copy, DataDir, IngestError, Variant, LITE_ROWS};
use crate::llm::{extract_code, Completion, EndpointConfig, GeneratedCode, LlmClient, LlmError, LoopDetector};
use crate::prompt::{build_codegen_prompt, build_repair_prompt, FailedAttempt, PromptKind, RenderedPrompt};
use crate::schema::{SchemaCache, SchemaError};
use crate::util::atomic_write;

pub const DEGENERATE_ERROR: &str = "model output degenerate repetition";
pub const NO_CODE_ERROR: &str = "model output contained no code";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Repair rounds after the first attempt.
    pub max_repairs: usize,
    /// Seconds per execution.
    pub execution_timeout: u64,
    pub endpoint: EndpointConfig,
    pub parallelism: usize,
    pub loop_detector: LoopDetector,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_repairs: 2,
            execution_timeout: 30,
            endpoint: EndpointConfig::default(),
            parallelism: 4,
            loop_detector: LoopDetector::default(),
        }
    }
}

/// One question to answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub question_id: String,
    pub question: String,
    #[serde(alias = "dataset")]
    pub dataset_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt_index: usize,
    pub prompt: RenderedPrompt,
    pub completion: Completion,
    /// Absent when nothing could be extracted or the completion was degenerate.
    pub code: Option<GeneratedCode>,
    pub outcome: Option<ExecutionOutcome>,
    pub error_class: Option<ErrorClass>,
    /// The error text shown to the model in later repair prompts.
    pub error_message: Option<String>,
}

impl AttemptRecord {
    pub fn succeeded(&self) -> bool {
        self.outcome.as_ref().is_some_and(ExecutionOutcome::is_success)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Answered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub question_id: String,
    pub question: String,
    pub dataset_id: String,
    pub variant: Variant,
    pub attempts: Vec<AttemptRecord>,
    pub final_answer_text: Option<String>,
    pub status: RunStatus,
    pub total_duration_ms: u64,
    pub max_repairs: usize,
    /// Set when the run was aborted by an infrastructure error rather than
    /// by exhausting its attempts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl RunRecord {
    fn aborted(task: &Task, variant: Variant, max_repairs: usize, elapsed: Duration, diagnostic: String) -> Self {
        Self {
            question_id: task.question_id.clone(),
            question: task.question.clone(),
            dataset_id: task.dataset_id.clone(),
            variant,
            attempts: Vec::new(),
            final_answer_text: None,
            status: RunStatus::Failed,
            total_duration_ms: elapsed.as_millis() as u64,
            max_repairs,
            diagnostic: Some(diagnostic),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("cannot write run output: {0}")]
    Output(#[from] std::io::Error),
}

impl PipelineError {
    pub fn is_dataset_missing(&self) -> bool {
        matches!(
            self,
            PipelineError::Ingest(IngestError::DatasetMissing(_))
                | PipelineError::Schema(SchemaError::Ingest(IngestError::DatasetMissing(_)))
        )
    }
}

pub struct Pipeline {
    data: DataDir,
    schemas: Arc<SchemaCache>,
    llm: Arc<LlmClient>,
    executor: Arc<Orchestrator>,
    work_dir: PathBuf,
    config: PipelineConfig,
    exec_files: Mutex<HashMap<(String, Variant), PathBuf>>,
    codegen_prompts: AtomicUsize,
    repair_prompts: AtomicUsize,
}

impl Pipeline {
    /// `cache_dir/exec/` receives the parquet copies scripts run against.
    pub fn new(
        data: DataDir,
        schemas: Arc<SchemaCache>,
        llm: Arc<LlmClient>,
        executor: Arc<Orchestrator>,
        cache_dir: &Path,
        config: PipelineConfig,
    ) -> Self {
        Self {
            data,
            schemas,
            llm,
            executor,
            work_dir: cache_dir.join("exec"),
            config,
            exec_files: Mutex::new(HashMap::new()),
            codegen_prompts: AtomicUsize::new(0),
            repair_prompts: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn schemas(&self) -> &SchemaCache {
        &self.schemas
    }

    pub fn llm(&self) -> &LlmClient {
        &self.llm
    }

    pub fn executor(&self) -> &Orchestrator {
        &self.executor
    }

    /// (code-generation, repair) prompts built so far.
    pub fn prompt_counts(&self) -> (usize, usize) {
        (
            self.codegen_prompts.load(Ordering::SeqCst),
            self.repair_prompts.load(Ordering::SeqCst),
        )
    }

    /// The file a script for this dataset and variant runs against. Full runs
    /// use all rows; lite runs use the provided sample or else the first 20
    /// rows. Either way the headers are the normalized ones from the schema.
    pub fn execution_file(&self, dataset_id: &str, variant: Variant) -> Result<PathBuf, PipelineError> {
        let key = (dataset_id.to_string(), variant);
        let mut files = self.exec_files.lock().expect("exec file map poisoned");
        if let Some(path) = files.get(&key) {
            return Ok(path.clone());
        }
        let full = self.data.full_path(dataset_id)?;
        let (src, rows) = match variant {
            Variant::Full => (full, None),
            Variant::Lite => match self.data.sample_path(dataset_id) {
                Some(sample) => (sample, None),
                None => (full, Some(LITE_ROWS)),
            },
        };
        let dst = self.work_dir.join(variant.to_string()).join(format!("{dataset_id}.parquet"));
        if !is_fresh(&dst, &src) {
            write_execution_copy(&src, &dst, rows)?;
        }
        files.insert(key, dst.clone());
        Ok(dst)
    }

    pub fn answer_question(&self, task: &Task, variant: Variant) -> Result<RunRecord, PipelineError> {
        let started = Instant::now();
        let schema = self.schemas.get_or_build(&self.data, &task.dataset_id)?;
        let exec_file = self.execution_file(&task.dataset_id, variant)?;
        let timeout = Duration::from_secs(self.config.execution_timeout);

        let mut attempts: Vec<AttemptRecord> = Vec::new();
        let mut history: Vec<FailedAttempt> = Vec::new();
        for attempt_index in 1..=1 + self.config.max_repairs {
            let prompt = if history.is_empty() {
                self.codegen_prompts.fetch_add(1, Ordering::SeqCst);
                build_codegen_prompt(&task.question, &schema, &task.dataset_id)
            } else {
                self.repair_prompts.fetch_add(1, Ordering::SeqCst);
                build_repair_prompt(&task.question, &schema, &task.dataset_id, &history)
                    .expect("history is non-empty")
            };
            let completion = self.llm.complete(&prompt)?;

            let mut record = AttemptRecord {
                attempt_index,
                prompt,
                completion,
                code: None,
                outcome: None,
                error_class: None,
                error_message: None,
            };
            let extracted = if self.config.loop_detector.is_degenerate(&record.completion) {
                Err(DEGENERATE_ERROR)
            } else {
                extract_code(&record.completion.text).map_err(|_| NO_CODE_ERROR)
            };
            match extracted {
                Err(message) => {
                    record.error_class = Some(classify_error(Stage::Generation, ""));
                    record.error_message = Some(message.to_string());
                    history.push(FailedAttempt::new("", message));
                }
                Ok(code) => {
                    let request = ExecutionRequest::new(code.clone(), &exec_file, &task.dataset_id).with_timeout(timeout);
                    let outcome = self.executor.execute(&request)?;
                    if !outcome.is_success() {
                        record.error_class = outcome.error_class.clone();
                        record.error_message = Some(outcome.error_message.clone());
                        history.push(FailedAttempt::new(code.source.clone(), outcome.error_message.clone()));
                    }
                    record.code = Some(code);
                    record.outcome = Some(outcome);
                }
            }
            let done = record.succeeded();
            attempts.push(record);
            if done {
                break;
            }
        }

        let final_answer_text = attempts
            .iter()
            .rev()
            .find_map(|a| a.outcome.as_ref().filter(|o| o.is_success()).map(|o| o.answer_text.clone()));
        Ok(RunRecord {
            question_id: task.question_id.clone(),
            question: task.question.clone(),
            dataset_id: task.dataset_id.clone(),
            variant,
            status: if final_answer_text.is_some() {
                RunStatus::Answered
            } else {
                RunStatus::Failed
            },
            final_answer_text,
            attempts,
            total_duration_ms: started.elapsed().as_millis() as u64,
            max_repairs: self.config.max_repairs,
            diagnostic: None,
        })
    }

    /// Answers every task with up to `parallelism` workers. Records come back
    /// in input order; a task that errors or panics becomes a Failed record
    /// carrying a diagnostic.
    ///
    /// With `run_dir`, `config.json` is written first, each record is appended
    /// to `records.jsonl` as soon as it finishes, and the file is finally
    /// rewritten in input order.
    pub fn run_batch(&self, tasks: &[Task], variant: Variant, run_dir: Option<&Path>) -> Result<Vec<RunRecord>, PipelineError> {
        let sink = match run_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let config = serde_json::to_vec_pretty(&BatchSnapshot {
                    variant,
                    tasks: tasks.len(),
                    config: &self.config,
                })
                .expect("config serializes");
                atomic_write(&dir.join("config.json"), &config)?;
                let file = OpenOptions::new()
                    .create(true)
                    .write(true)
                    .truncate(true)
                    .open(dir.join(RECORDS_FILE))?;
                Some(Mutex::new(file))
            }
            None => None,
        };

        let slots: Vec<Mutex<Option<RunRecord>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.parallelism.clamp(1, tasks.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(task) = tasks.get(i) else { break };
                    let record = self.run_isolated(task, variant);
                    if let Some(sink) = &sink {
                        let mut file = sink.lock().unwrap_or_else(|e| e.into_inner());
                        if let Err(e) = append_record(&mut file, &record) {
                            log::warn!("could not persist record {}: {e}", record.question_id);
                        }
                    }
                    *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(record);
                });
            }
        });

        let records: Vec<RunRecord> = slots
            .into_iter()
            .map(|s| s.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every task ran"))
            .collect();
        if let Some(dir) = run_dir {
            write_records(&dir.join(RECORDS_FILE), &records)?;
        }
        Ok(records)
    }

    fn run_isolated(&self, task: &Task, variant: Variant) -> RunRecord {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| self.answer_question(task, variant)));
        let diagnostic = match result {
            Ok(Ok(record)) => return record,
            Ok(Err(e)) => e.to_string(),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown panic".into());
                format!("task panicked: {msg}")
            }
        };
        log::warn!("question {} failed: {diagnostic}", task.question_id);
        RunRecord::aborted(task, variant, self.config.max_repairs, started.elapsed(), diagnostic)
    }
}

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Serialize)]
struct BatchSnapshot<'a> {
    variant: Variant,
    tasks: usize,
    config: &'a PipelineConfig,
}

fn is_fresh(dst: &Path, src: &Path) -> bool {
    let modified = |p: &Path| std::fs::metadata(p).and_then(|m| m.modified()).ok();
    matches!((modified(dst), modified(src)), (Some(d), Some(s)) if d >= s)
}

fn append_record(file: &mut File, record: &RunRecord) -> std::io::Result<()> {
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> std::io::Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, RecordsError> {
    let text = std::fs::read_to_string(path).map_err(|e| RecordsError::Io(path.to_path_buf(), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RecordsError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

/// Every attempt after the first is a repair whose history covers all
/// earlier attempts.
pub fn check_attempt_shape(record: &RunRecord) -> bool {
    record.attempts.len() <= 1 + record.max_repairs
        && record.attempts.iter().enumerate().all(|(i, a)| {
            a.attempt_index == i + 1
                && a.prompt.history_len == i
                && (a.prompt.kind == PromptKind::Codegen) == (i == 0)
        })
}
