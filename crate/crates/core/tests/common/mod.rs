#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use tabqa_core::exec::{ExecutorBackend, Orchestrator, StubBackend};
use tabqa_core::llm::{CompletionBackend, EndpointConfig, LlmClient, MockBackend, ResponseCache};
use tabqa_core::pipeline::{Pipeline, PipelineConfig, Task};
use tabqa_core::schema::SchemaCache;
use tabqa_core::DataDir;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn e2e() -> PathBuf {
    fixtures().join("e2e")
}

pub fn pipeline_with(
    llm: Arc<dyn CompletionBackend>,
    executor: Arc<dyn ExecutorBackend>,
    cache_dir: &Path,
    config: PipelineConfig,
) -> Pipeline {
    pipeline_with_cache(llm, executor, cache_dir, config, ResponseCache::on_disk(cache_dir))
}

pub fn pipeline_with_cache(
    llm: Arc<dyn CompletionBackend>,
    executor: Arc<dyn ExecutorBackend>,
    cache_dir: &Path,
    config: PipelineConfig,
    responses: ResponseCache,
) -> Pipeline {
    let client = LlmClient::new(llm, EndpointConfig::default(), responses);
    Pipeline::new(
        DataDir::new(fixtures().join("datasets")),
        Arc::new(SchemaCache::on_disk(cache_dir)),
        Arc::new(client),
        Arc::new(Orchestrator::new(executor)),
        cache_dir,
        config,
    )
}

/// Pipeline over the scripted 20-question fixture.
pub fn e2e_pipeline(cache_dir: &Path, config: PipelineConfig) -> Pipeline {
    let mock = MockBackend::from_path(&e2e().join("mock.jsonl")).unwrap();
    let stub = StubBackend::from_path(&e2e().join("executor.json")).unwrap();
    pipeline_with(Arc::new(mock), Arc::new(stub), cache_dir, config)
}

pub fn e2e_tasks() -> Vec<Task> {
    tabqa_core::answers::load_questions(&e2e().join("questions.jsonl")).unwrap()
}

/// Scripted final answers; `None` for the question whose budget runs out.
pub const E2E_FINAL: [(&str, Option<&str>); 20] = [
    ("q01", Some("Kevin Durant")),
    ("q02", Some("2280.0")),
    ("q03", Some("False")),
    ("q04", Some("31")),
    ("q05", Some("0.4612")),
    ("q06", Some("['Kevin Durant', 'LeBron James', 'James Harden']")),
    ("q07", Some("[551, 469, 455]")),
    ("q08", Some("710")),
    ("q09", Some("True")),
    ("q10", Some("Attractions")),
    ("q11", Some("40")),
    ("q12", Some("['Convertible', 'Coupe', 'Crossover']")),
    ("q13", Some("OKC")),
    ("q14", Some("1025600")),
    ("q15", Some("40")),
    ("q16", Some("['Amusement and Theme Parks', 'Bars & Restaurants', 'Casinos & Gambling']")),
    ("q17", Some("0.78")),
    ("q18", Some("60")),
    ("q19", None),
    ("q20", Some("0.98")),
];

/// Attempts each fixture question takes under the default budget.
pub const E2E_ATTEMPTS: [usize; 20] = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 2];
