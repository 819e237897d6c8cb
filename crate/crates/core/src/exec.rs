//! Running generated scripts through an executor backend, with a global cap on
//! concurrent sandboxes, wall-clock timeouts and error classification.
//!
//! The process backend talks to a runner executable over a one-line JSON
//! protocol: a [`RunnerRequest`] on stdin, a [`RunnerResponse`] on stdout.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::GeneratedCode;
use crate::util::{atomic_write, last_non_empty_line, sha256_hex};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_MAX_CONCURRENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorTag {
    Runtime,
    Syntax,
    DegenerateLoop,
    Timeout,
}

impl ErrorTag {
    pub fn label(self) -> &'static str {
        match self {
            ErrorTag::Runtime => "Runtime",
            ErrorTag::Syntax => "Syntax",
            ErrorTag::DegenerateLoop => "Degenerate Loop",
            ErrorTag::Timeout => "Timeout",
        }
    }
}

/// `subtype` is the exception name and is set only for `Runtime`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorClass {
    pub tag: ErrorTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
}

impl ErrorClass {
    pub fn new(tag: ErrorTag) -> Self {
        debug_assert!(tag != ErrorTag::Runtime);
        Self { tag, subtype: None }
    }

    pub fn runtime(subtype: impl Into<String>) -> Self {
        Self {
            tag: ErrorTag::Runtime,
            subtype: Some(subtype.into()),
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subtype {
            Some(s) => write!(f, "{}/{}", self.tag.label(), s),
            None => f.write_str(self.tag.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Generation,
    Compile,
    Run,
    Timeout,
}

pub fn classify_error(stage: Stage, type_name: &str) -> ErrorClass {
    match stage {
        Stage::Generation => ErrorClass::new(ErrorTag::DegenerateLoop),
        Stage::Compile => ErrorClass::new(ErrorTag::Syntax),
        Stage::Timeout => ErrorClass::new(ErrorTag::Timeout),
        Stage::Run => {
            let name = type_name.trim();
            ErrorClass::runtime(if name.is_empty() { "Exception" } else { name })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerRequest {
    pub code: String,
    pub dataset_path: String,
    pub dataset_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunnerStatus {
    Ok,
    CompileError,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerResponse {
    pub status: RunnerStatus,
    #[serde(default)]
    pub answer_text: String,
    #[serde(default)]
    pub error_type: String,
    #[serde(default)]
    pub error_message: String,
    #[serde(default)]
    pub duration_ms: u64,
}

impl RunnerResponse {
    pub fn ok(answer: impl Into<String>) -> Self {
        Self {
            status: RunnerStatus::Ok,
            answer_text: answer.into(),
            error_type: String::new(),
            error_message: String::new(),
            duration_ms: 0,
        }
    }

    pub fn error(status: RunnerStatus, error_type: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            answer_text: String::new(),
            error_type: error_type.into(),
            error_message: message.into(),
            duration_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionRequest {
    pub code: GeneratedCode,
    pub dataset_path: PathBuf,
    /// Stem of the file name the script expects (`<name>.parquet`).
    pub dataset_name: String,
    pub timeout: Duration,
}

impl ExecutionRequest {
    pub fn new(code: GeneratedCode, dataset_path: impl Into<PathBuf>, dataset_name: impl Into<String>) -> Self {
        Self {
            code,
            dataset_path: dataset_path.into(),
            dataset_name: dataset_name.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn runner_request(&self) -> RunnerRequest {
        RunnerRequest {
            code: self.code.source.clone(),
            dataset_path: self.dataset_path.display().to_string(),
            dataset_name: self.dataset_name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    Success,
    Error,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: ExecStatus,
    /// Final printed line; empty unless `Success`.
    pub answer_text: String,
    pub error_class: Option<ErrorClass>,
    pub error_type: String,
    /// `Type: message` from the last traceback line; what the repair prompt shows.
    pub error_message: String,
    /// Everything the runner reported about the failure.
    #[serde(default)]
    pub error_detail: String,
    pub duration_ms: u64,
}

impl ExecutionOutcome {
    pub fn from_response(resp: &RunnerResponse) -> Self {
        let stage = match resp.status {
            RunnerStatus::Ok => {
                return Self {
                    status: ExecStatus::Success,
                    answer_text: last_non_empty_line(&resp.answer_text).trim().to_string(),
                    error_class: None,
                    error_type: String::new(),
                    error_message: String::new(),
                    error_detail: String::new(),
                    duration_ms: resp.duration_ms,
                }
            }
            RunnerStatus::CompileError => Stage::Compile,
            RunnerStatus::RuntimeError => Stage::Run,
        };
        let error_class = classify_error(stage, &resp.error_type);
        let error_type = match resp.error_type.trim() {
            "" => error_class.subtype.clone().unwrap_or_else(|| "SyntaxError".into()),
            t => t.to_string(),
        };
        let last = last_non_empty_line(&resp.error_message).trim();
        let error_message = if last.is_empty() || last == error_type {
            error_type.clone()
        } else if last.starts_with(&format!("{error_type}:")) {
            last.to_string()
        } else {
            format!("{error_type}: {last}")
        };
        Self {
            status: ExecStatus::Error,
            answer_text: String::new(),
            error_class: Some(error_class),
            error_type,
            error_message,
            error_detail: resp.error_message.clone(),
            duration_ms: resp.duration_ms,
        }
    }

    pub fn timeout(limit: Duration, elapsed: Duration) -> Self {
        let message = format!("TimeoutError: execution exceeded the {}s time limit", limit.as_secs_f64());
        Self {
            status: ExecStatus::Timeout,
            answer_text: String::new(),
            error_class: Some(classify_error(Stage::Timeout, "")),
            error_type: "TimeoutError".into(),
            error_detail: message.clone(),
            error_message: message,
            duration_ms: elapsed.as_millis() as u64,
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == ExecStatus::Success
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("executor backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("dataset file {0} does not exist")]
    DatasetMissing(PathBuf),
    #[error("runner protocol violation: {0}")]
    Protocol(String),
    #[error("stub executor has no response for code:\n{0}")]
    StubMissing(String),
    #[error("stub fixture {path}: {reason}")]
    StubFixture { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait ExecutorBackend: Send + Sync {
    fn run(&self, request: &ExecutionRequest) -> Result<ExecutionOutcome, ExecError>;
}

/// Spawns the runner once per execution and kills it at the deadline.
#[derive(Debug, Clone)]
pub struct ProcessBackend {
    program: PathBuf,
    args: Vec<String>,
}

impl ProcessBackend {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            args: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    /// Splits a configured command line on whitespace: program then arguments.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace();
        let program = parts.next()?;
        Some(Self::new(program).with_args(parts.map(str::to_string)))
    }
}

impl ExecutorBackend for ProcessBackend {
    fn run(&self, request: &ExecutionRequest) -> Result<ExecutionOutcome, ExecError> {
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                    ExecError::BackendUnavailable(format!("{}: {e}", self.program.display()))
                }
                _ => ExecError::Io(e),
            })?;

        let mut line = serde_json::to_string(&request.runner_request())
            .map_err(|e| ExecError::Protocol(e.to_string()))?;
        line.push('\n');
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // A runner that exits without reading its input surfaces below as a
        // missing response, so a broken pipe here is not an error by itself.
        let _ = stdin.write_all(line.as_bytes());
        drop(stdin);

        let mut stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut buf = String::new();
            let res = stdout.read_to_string(&mut buf).map(|_| buf);
            let _ = tx.send(res);
        });

        let output = match rx.recv_timeout(request.timeout) {
            Ok(res) => res?,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(ExecutionOutcome::timeout(request.timeout, started.elapsed()));
            }
        };
        let remaining = request.timeout.saturating_sub(started.elapsed());
        let status = wait_with_deadline(&mut child, remaining)?;
        let Some(status) = status else {
            return Ok(ExecutionOutcome::timeout(request.timeout, started.elapsed()));
        };

        let last = last_non_empty_line(&output);
        if last.is_empty() {
            return Err(ExecError::Protocol(format!("runner exited with {status} and no response")));
        }
        let resp: RunnerResponse = serde_json::from_str(last)
            .map_err(|e| ExecError::Protocol(format!("bad response line {last:?}: {e}")))?;
        let mut outcome = ExecutionOutcome::from_response(&resp);
        outcome.duration_ms = started.elapsed().as_millis() as u64;
        Ok(outcome)
    }
}

fn wait_with_deadline(
    child: &mut std::process::Child,
    remaining: Duration,
) -> std::io::Result<Option<std::process::ExitStatus>> {
    let deadline = Instant::now() + remaining;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if Instant::now() >= deadline {
            child.kill()?;
            child.wait()?;
            return Ok(None);
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

/// One scripted executor result. `timeout: true` simulates a script that
/// never finishes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubEntry {
    pub code: String,
    #[serde(default)]
    pub timeout: bool,
    #[serde(flatten)]
    pub response: Option<RunnerResponse>,
}

/// Looks results up by exact script text; for tests and offline fixtures.
#[derive(Debug, Default, Clone)]
pub struct StubBackend {
    entries: HashMap<String, StubEntry>,
}

impl StubBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, code: impl Into<String>, response: RunnerResponse) -> Self {
        let code = code.into();
        self.entries.insert(
            code.trim().to_string(),
            StubEntry {
                code,
                timeout: false,
                response: Some(response),
            },
        );
        self
    }

    pub fn with_timeout(mut self, code: impl Into<String>) -> Self {
        let code = code.into();
        self.entries.insert(
            code.trim().to_string(),
            StubEntry {
                code,
                timeout: true,
                response: None,
            },
        );
        self
    }

    /// Reads a JSON array of [`StubEntry`] objects.
    pub fn from_path(path: &Path) -> Result<Self, ExecError> {
        let fixture_err = |reason: String| ExecError::StubFixture {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let entries: Vec<StubEntry> = serde_json::from_str(&text).map_err(|e| fixture_err(e.to_string()))?;
        let mut stub = Self::new();
        for entry in entries {
            if !entry.timeout && entry.response.is_none() {
                return Err(fixture_err(format!("entry for {:?} has neither a status nor timeout", entry.code)));
            }
            stub.entries.insert(entry.code.trim().to_string(), entry);
        }
        Ok(stub)
    }
}

impl ExecutorBackend for StubBackend {
    fn run(&self, request: &ExecutionRequest) -> Result<ExecutionOutcome, ExecError> {
        let entry = self
            .entries
            .get(request.code.source.trim())
            .ok_or_else(|| ExecError::StubMissing(request.code.source.clone()))?;
        match &entry.response {
            Some(resp) if !entry.timeout => Ok(ExecutionOutcome::from_response(resp)),
            _ => Ok(ExecutionOutcome::timeout(request.timeout, request.timeout)),
        }
    }
}

/// Finished outcomes keyed by script, dataset file identity and time limit,
/// kept in memory and optionally under `<cache_dir>/outcomes/`. Timeouts are
/// never stored.
#[derive(Debug, Default)]
pub struct OutcomeCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, ExecutionOutcome>>,
    hits: AtomicUsize,
}

impl OutcomeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(cache_dir.into().join("outcomes")),
            ..Self::default()
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    /// The dataset is identified by path, size and modification time.
    pub fn key(request: &ExecutionRequest) -> Option<String> {
        let meta = std::fs::metadata(&request.dataset_path).ok()?;
        let mtime = meta.modified().ok()?.duration_since(std::time::UNIX_EPOCH).ok()?;
        let material = serde_json::json!({
            "code": request.code.source,
            "dataset_path": request.dataset_path,
            "dataset_name": request.dataset_name,
            "dataset_len": meta.len(),
            "dataset_mtime_ns": mtime.as_nanos().to_string(),
            "timeout_ms": request.timeout.as_millis().to_string(),
        });
        Some(sha256_hex(material.to_string().as_bytes()))
    }

    pub fn get(&self, key: &str) -> Option<ExecutionOutcome> {
        let cached = self.memory.lock().expect("outcome cache poisoned").get(key).cloned();
        let found = cached.or_else(|| {
            let path = self.dir.as_ref()?.join(format!("{key}.json"));
            let outcome: ExecutionOutcome = serde_json::from_slice(&std::fs::read(path).ok()?).ok()?;
            self.memory
                .lock()
                .expect("outcome cache poisoned")
                .insert(key.to_string(), outcome.clone());
            Some(outcome)
        });
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        found
    }

    pub fn put(&self, key: &str, outcome: &ExecutionOutcome) {
        if outcome.status == ExecStatus::Timeout {
            return;
        }
        if let Some(dir) = &self.dir {
            let bytes = serde_json::to_vec(outcome).expect("outcome serializes");
            if let Err(e) = atomic_write(&dir.join(format!("{key}.json")), &bytes) {
                log::warn!("cannot persist execution outcome: {e}");
            }
        }
        self.memory
            .lock()
            .expect("outcome cache poisoned")
            .insert(key.to_string(), outcome.clone());
    }
}

#[derive(Debug)]
struct Permits {
    free: Mutex<usize>,
    freed: Condvar,
}

/// Dispatches executions to a backend, never running more than
/// `max_concurrent` at once.
pub struct Orchestrator {
    backend: Arc<dyn ExecutorBackend>,
    outcomes: Option<OutcomeCache>,
    permits: Permits,
    max_concurrent: usize,
    active: AtomicUsize,
    peak: AtomicUsize,
    executions: AtomicUsize,
}

impl Orchestrator {
    pub fn new(backend: Arc<dyn ExecutorBackend>) -> Self {
        Self::with_max_concurrent(backend, DEFAULT_MAX_CONCURRENT)
    }

    pub fn with_max_concurrent(backend: Arc<dyn ExecutorBackend>, max_concurrent: usize) -> Self {
        let max_concurrent = max_concurrent.max(1);
        Self {
            backend,
            outcomes: None,
            permits: Permits {
                free: Mutex::new(max_concurrent),
                freed: Condvar::new(),
            },
            max_concurrent,
            active: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            executions: AtomicUsize::new(0),
        }
    }

    /// Serve repeated executions from `cache` instead of the backend.
    pub fn with_outcome_cache(mut self, cache: OutcomeCache) -> Self {
        self.outcomes = Some(cache);
        self
    }

    pub fn outcome_cache(&self) -> Option<&OutcomeCache> {
        self.outcomes.as_ref()
    }

    pub fn max_concurrent(&self) -> usize {
        self.max_concurrent
    }

    /// Highest number of simultaneous executions seen so far.
    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    /// Executions that reached the backend.
    pub fn executions(&self) -> usize {
        self.executions.load(Ordering::SeqCst)
    }

    pub fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionOutcome, ExecError> {
        if !request.dataset_path.exists() {
            return Err(ExecError::DatasetMissing(request.dataset_path.clone()));
        }
        let key = self.outcomes.as_ref().and_then(|_| OutcomeCache::key(request));
        if let (Some(cache), Some(key)) = (&self.outcomes, &key) {
            if let Some(hit) = cache.get(key) {
                return Ok(hit);
            }
        }
        {
            let mut free = self.permits.free.lock().expect("permit lock poisoned");
            while *free == 0 {
                free = self.permits.freed.wait(free).expect("permit lock poisoned");
            }
            *free -= 1;
        }
        let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.executions.fetch_add(1, Ordering::SeqCst);

        let result = self.backend.run(request);

        self.active.fetch_sub(1, Ordering::SeqCst);
        *self.permits.free.lock().expect("permit lock poisoned") += 1;
        self.permits.freed.notify_one();
        if let (Some(cache), Some(key), Ok(outcome)) = (&self.outcomes, &key, &result) {
            cache.put(key, outcome);
        }
        result
    }
}
