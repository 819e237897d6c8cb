mod config;

use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tabqa_core::answers::{accuracy, load_gold, load_questions, predictions_text, FAILED_TOKEN};
use tabqa_core::exec::{ExecutorBackend, ProcessBackend, StubBackend};
use tabqa_core::llm::{CompletionBackend, HttpBackend, MockBackend, ResponseCache};
use tabqa_core::pipeline::{read_records, RECORDS_FILE};
use tabqa_core::report::{build_report, emit, Format, ReportOptions};
use tabqa_core::schema::SchemaCache;
use tabqa_core::{DataDir, LlmClient, Orchestrator, OutcomeCache, Pipeline, RunRecord, RunStatus, Task, Variant};

use crate::config::{AppConfig, BackendKind, ExecutorKind, Overrides};

const EXIT_FAILED: u8 = 3;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "tabqa", version, about = "Answer questions over tables with generated pandas code")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Config file (default: $TABQA_CONFIG, then ./tabqa.toml).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, global = true)]
    mock_fixture: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    executor: Option<ExecutorKind>,
    /// Sandbox runner command line for the process executor.
    #[arg(long, global = true)]
    runner: Option<String>,
    #[arg(long, global = true)]
    stub_fixture: Option<PathBuf>,
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rendered schema of a dataset.
    Schema {
        dataset_id: String,
        /// Rebuild without reading or writing the schema cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Answer one question, or read questions from stdin with --repl.
    Ask {
        dataset_id: String,
        #[arg(required_unless_present = "repl")]
        question: Option<String>,
        #[arg(long, conflicts_with = "question")]
        repl: bool,
        /// Print every attempt as JSON on stderr.
        #[arg(long)]
        trace: bool,
        /// Execute against the sample file.
        #[arg(long)]
        lite: bool,
        #[arg(long)]
        max_repairs: Option<usize>,
    },
    /// Answer every question in a file and write the run directory.
    Run {
        questions: PathBuf,
        #[arg(long)]
        lite: bool,
        #[arg(long)]
        max_repairs: Option<usize>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Score run records against gold answers.
    Eval {
        /// A records.jsonl file or the run directory holding it.
        records: PathBuf,
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        subtask: Subtask,
    },
    /// Summarize error evolution across repair iterations.
    Report {
        /// A records.jsonl file or the run directory holding it.
        records: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
        /// Fold timeouts into runtime errors.
        #[arg(long)]
        paper_compat: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Subtask {
    Full,
    Lite,
}

impl From<Subtask> for Variant {
    fn from(s: Subtask) -> Self {
        match s {
            Subtask::Full => Variant::Full,
            Subtask::Lite => Variant::Lite,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl From<ReportFormat> for Format {
    fn from(f: ReportFormat) -> Self {
        match f {
            ReportFormat::Json => Format::Json,
            ReportFormat::Markdown => Format::Markdown,
            ReportFormat::Csv => Format::Csv,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = cli.global;
    let mut overrides = Overrides {
        data_dir: g.data_dir,
        cache_dir: g.cache_dir,
        out_dir: g.out_dir,
        backend: g.backend,
        mock_fixture: g.mock_fixture,
        executor: g.executor,
        runner: g.runner,
        stub_fixture: g.stub_fixture,
        base_url: g.base_url,
        model: g.model,
        ..Overrides::default()
    };
    let config_path = g.config;
    let load = |o: &Overrides| AppConfig::load(config_path.as_deref(), o);

    match cli.command {
        Command::Schema { dataset_id, no_cache } => cmd_schema(&load(&overrides)?, &dataset_id, no_cache),
        Command::Ask {
            dataset_id,
            question,
            repl,
            trace,
            lite,
            max_repairs,
        } => {
            overrides.max_repairs = max_repairs;
            let config = load(&overrides)?;
            let variant = if lite { Variant::Lite } else { Variant::Full };
            match question {
                Some(q) if !repl => cmd_ask(&config, &dataset_id, &q, variant, trace),
                _ => cmd_repl(&config, &dataset_id, variant, trace),
            }
        }
        Command::Run {
            questions,
            lite,
            max_repairs,
            parallelism,
            run_id,
        } => {
            overrides.max_repairs = max_repairs;
            overrides.parallelism = parallelism;
            let variant = if lite { Variant::Lite } else { Variant::Full };
            cmd_run(&load(&overrides)?, &questions, variant, run_id)
        }
        Command::Eval { records, gold, subtask } => cmd_eval(&records, &gold, subtask.into()),
        Command::Report {
            records,
            format,
            paper_compat,
        } => cmd_report(&records, format.into(), paper_compat),
    }
}

fn cmd_schema(config: &AppConfig, dataset_id: &str, no_cache: bool) -> Result<ExitCode> {
    let cache = if no_cache {
        SchemaCache::in_memory()
    } else {
        SchemaCache::on_disk(&config.cache_dir)
    };
    let text = cache.get_or_build(&DataDir::new(&config.data_dir), dataset_id)?;
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    if out.is_terminal() {
        out.write_all(b"\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn build_pipeline(config: &AppConfig) -> Result<Pipeline> {
    let backend: Arc<dyn CompletionBackend> = match config.backend {
        BackendKind::Http => Arc::new(HttpBackend::new(Duration::from_secs(config.endpoint.request_timeout))?),
        BackendKind::Mock => {
            let path = config.mock_fixture.as_deref().context("mock backend needs a fixture")?;
            Arc::new(MockBackend::from_path(path)?)
        }
    };
    let executor: Arc<dyn ExecutorBackend> = match config.executor {
        ExecutorKind::Process => {
            Arc::new(ProcessBackend::from_command_line(&config.runner).context("empty runner command")?)
        }
        ExecutorKind::Stub => {
            let path = config.stub_fixture.as_deref().context("stub executor needs a fixture")?;
            Arc::new(StubBackend::from_path(path)?)
        }
    };
    let llm = LlmClient::new(backend, config.endpoint.clone(), ResponseCache::on_disk(&config.cache_dir));
    Ok(Pipeline::new(
        DataDir::new(&config.data_dir),
        Arc::new(SchemaCache::on_disk(&config.cache_dir)),
        Arc::new(llm),
        Arc::new(
            Orchestrator::with_max_concurrent(executor, config.max_concurrent)
                .with_outcome_cache(OutcomeCache::on_disk(&config.cache_dir)),
        ),
        &config.cache_dir,
        config.pipeline.clone(),
    ))
}

fn answer_line(record: &RunRecord) -> &str {
    match (record.status, &record.final_answer_text) {
        (RunStatus::Answered, Some(text)) => text,
        _ => FAILED_TOKEN,
    }
}

fn print_trace(record: &RunRecord) {
    eprintln!("{}", serde_json::to_string_pretty(record).expect("record serializes"));
}

fn cmd_ask(config: &AppConfig, dataset_id: &str, question: &str, variant: Variant, trace: bool) -> Result<ExitCode> {
    let pipeline = build_pipeline(config)?;
    let task = Task {
        question_id: "ask".into(),
        question: question.into(),
        dataset_id: dataset_id.into(),
    };
    let record = pipeline.answer_question(&task, variant)?;
    if trace {
        print_trace(&record);
    }
    println!("{}", answer_line(&record));
    Ok(match record.status {
        RunStatus::Answered => ExitCode::SUCCESS,
        RunStatus::Failed => ExitCode::from(EXIT_FAILED),
    })
}

/// One question per input line until end of input. Each question prints one
/// answer line; infrastructure errors print FAILED and a diagnostic.
fn cmd_repl(config: &AppConfig, dataset_id: &str, variant: Variant, trace: bool) -> Result<ExitCode> {
    let pipeline = build_pipeline(config)?;
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut asked = 0;
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            eprint!("> ");
        }
        let Some(line) = lines.next() else { break };
        let question = line?;
        let question = question.trim();
        if question.is_empty() {
            continue;
        }
        asked += 1;
        let task = Task {
            question_id: format!("repl-{asked}"),
            question: question.into(),
            dataset_id: dataset_id.into(),
        };
        match pipeline.answer_question(&task, variant) {
            Ok(record) => {
                if trace {
                    print_trace(&record);
                }
                println!("{}", answer_line(&record));
            }
            Err(e) => {
                eprintln!("error: {e}");
                println!("{FAILED_TOKEN}");
            }
        }
        std::io::stdout().flush()?;
    }
    eprintln!(
        "answered {asked} question(s); schema builds: {}; model calls: {}",
        pipeline.schemas().builds(),
        pipeline.llm().backend_calls()
    );
    Ok(ExitCode::SUCCESS)
}

fn default_run_id() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("run-{secs}")
}

fn cmd_run(config: &AppConfig, questions: &Path, variant: Variant, run_id: Option<String>) -> Result<ExitCode> {
    let tasks = load_questions(questions)?;
    if tasks.is_empty() {
        bail!("{} holds no questions", questions.display());
    }
    let run_id = run_id.unwrap_or_else(default_run_id);
    if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == "." || run_id == ".." {
        bail!("invalid run id {run_id:?}");
    }
    let pipeline = build_pipeline(config)?;
    let dir = config.out_dir.join(&run_id);
    let records = pipeline.run_batch(&tasks, variant, Some(&dir))?;
    std::fs::write(dir.join("predictions.txt"), predictions_text(&records))
        .with_context(|| format!("cannot write predictions to {}", dir.display()))?;

    let answered = records.iter().filter(|r| r.status == RunStatus::Answered).count();
    eprintln!(
        "{answered}/{} answered; model calls: {}; executions: {}",
        records.len(),
        pipeline.llm().backend_calls(),
        pipeline.executor().executions()
    );
    println!("{}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn records_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(RECORDS_FILE)
    } else {
        path.to_path_buf()
    }
}

fn cmd_eval(records: &Path, gold: &Path, subtask: Variant) -> Result<ExitCode> {
    let records = read_records(&records_path(records))?;
    let gold = load_gold(gold)?;
    let report = accuracy(&records, &gold, subtask)?;
    println!("accuracy: {:.4}", report.accuracy);
    for (ty, score) in &report.per_type {
        println!("  {}: {}/{}", ty.label(), score.correct, score.total);
    }
    if !report.incorrect.is_empty() {
        println!("incorrect: {}", report.incorrect.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(records: &Path, format: Format, paper_compat: bool) -> Result<ExitCode> {
    let path = records_path(records);
    let runs = read_records(&path)?;
    let text = emit(&build_report(&runs, ReportOptions { paper_compat }), format);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let out = dir.join(format!("report.{}", format.extension()));
    std::fs::write(&out, &text).with_context(|| format!("cannot write {}", out.display()))?;
    print!("{text}");
    eprintln!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
