//! Acceptance checks. Runs without the libtest harness so each criterion
//! prints one PASS/FAIL line with its runtime; exits non-zero if any fails.

mod common;

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use serde::Deserialize;

use common::*;
use tabqa_core::answers::{accuracy, compare, load_gold, TypedAnswer};
use tabqa_core::exec::{ErrorClass, ErrorTag, ExecStatus, ExecutionOutcome, RunnerResponse, RunnerStatus, StubBackend};
use tabqa_core::ingest::{dedupe_column_names, normalize_column_name};
use tabqa_core::llm::{Completion, FinishReason, MockBackend, MockMatch, MockRecord, ResponseCache};
use tabqa_core::pipeline::{check_attempt_shape, AttemptRecord, PipelineConfig, RunRecord, RunStatus, Task};
use tabqa_core::prompt::{build_codegen_prompt, build_repair_prompt, FailedAttempt, PromptKind, RenderedPrompt};
use tabqa_core::report::{before_after, error_table, transitions, Granularity, ReportOptions, EXHAUSTED, RESOLVED};
use tabqa_core::schema::{build_schema, render_schema};
use tabqa_core::{DataDir, Variant};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Fixed seed so every run checks the same cases.
fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

// ---------------------------------------------------------------- schemas

fn golden_schema() -> Result<String, String> {
    let data = DataDir::new(fixtures().join("datasets"));
    for id in ["067_TripAdvisor", "069_Taxonomy", "076_NBA"] {
        let table = data.load(id, Variant::Full).map_err(|e| e.to_string())?;
        let got = render_schema(&build_schema(&table).map_err(|e| e.to_string())?);
        let want = std::fs::read_to_string(fixtures().join(format!("golden/schemas/{id}.txt"))).unwrap();
        let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
        ensure(g.len() == w.len(), format!("{id}: {} lines, golden has {}", g.len(), w.len()))?;
        for (gl, wl) in g.iter().zip(&w) {
            let same = if wl.starts_with("Column Name: season_type,") {
                gl.starts_with(wl)
            } else {
                gl == wl
            };
            ensure(same, format!("{id}: got {gl:?}, want {wl:?}"))?;
        }
    }
    Ok("3 datasets byte-exact, season_type line prefix-matched".into())
}

// ---------------------------------------------------------- normalization

fn normalization() -> Result<String, String> {
    ensure(normalize_column_name("Col@") == "col", "Col@")?;
    ensure(dedupe_column_names(&["col", "col"]) == ["col", "col_2"], "[col, col]")?;
    ensure(dedupe_column_names(&["x", "x", "x"]) == ["x", "x_2", "x_3"], "[x, x, x]")?;
    let collide = dedupe_column_names(&["col", "col", "col_2"]);
    ensure(collide.iter().collect::<HashSet<_>>().len() == 3, format!("collision {collide:?}"))?;

    runner(1000)
        .run(&"\\PC{0,24}|[ @#A-Za-z0-9_.-]{0,24}", |raw| {
            let once = normalize_column_name(&raw);
            prop_assert_eq!(normalize_column_name(&once), once.clone());
            prop_assert!(!once.is_empty());
            prop_assert!(once.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'));
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    runner(1000)
        .run(&prop::collection::vec("(col|x|a)(_[1-3])?", 0..12), |names| {
            let out = dedupe_column_names(&names);
            prop_assert_eq!(out.len(), names.len());
            prop_assert_eq!(out.iter().collect::<HashSet<_>>().len(), out.len());
            prop_assert_eq!(dedupe_column_names(&out), out.clone());
            let mut seen = HashSet::new();
            for (o, n) in out.iter().zip(&names) {
                if seen.insert(n.clone()) {
                    prop_assert_eq!(o, n);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("documented examples + 2x1000 property cases".into())
}

// ------------------------------------------------------------ end to end

fn end_to_end() -> Result<String, String> {
    let cache = tempfile::tempdir().unwrap();
    let pipeline = e2e_pipeline(cache.path(), PipelineConfig::default());
    let records = pipeline
        .run_batch(&e2e_tasks(), Variant::Full, None)
        .map_err(|e| e.to_string())?;
    ensure(records.len() == 20, "20 records")?;
    for (r, (id, want)) in records.iter().zip(E2E_FINAL) {
        ensure(r.question_id == id, format!("order: {} at {id}", r.question_id))?;
        ensure(r.final_answer_text.as_deref() == want, format!("{id}: {:?}", r.final_answer_text))?;
    }
    let gold = load_gold(&e2e().join("gold.jsonl")).map_err(|e| e.to_string())?;
    let acc = accuracy(&records, &gold, Variant::Full).map_err(|e| e.to_string())?;
    ensure(acc.correct == 19 && (acc.accuracy - 0.95).abs() < 1e-12, format!("accuracy {}", acc.accuracy))?;
    let ba = before_after(&records);
    ensure((ba.initial_errors, ba.final_errors) == (8, 1), format!("before/after {ba}"))?;
    Ok(format!("20 scripted answers, accuracy {:.4}, before/after {ba}", acc.accuracy))
}

// ------------------------------------------------------------ loop budget

#[derive(Debug, Clone, Copy)]
enum Step {
    Runtime,
    Syntax,
    Timeout,
    Degenerate,
    NoCode,
    Success,
}

fn failing_step() -> impl Strategy<Value = Step> {
    prop_oneof![
        Just(Step::Runtime),
        Just(Step::Syntax),
        Just(Step::Timeout),
        Just(Step::Degenerate),
        Just(Step::NoCode),
    ]
}

fn loop_budget() -> Result<String, String> {
    let cache = tempfile::tempdir().unwrap();
    let strategy = (prop::collection::vec(failing_step(), 0..=10), any::<bool>(), 0usize..=3);
    let runs = Cell::new(0usize);
    runner(120)
        .run(&strategy, |(failures, succeed, max_repairs)| {
            let mut script = failures.clone();
            if succeed {
                script.push(Step::Success);
            }
            // Keep scripting failures past any budget, so a loop that
            // overruns gets more work instead of an exhausted mock.
            while script.len() < 12 {
                script.push(Step::Runtime);
            }
            let code = |i: usize| format!("print('attempt {i}')");
            let mut mock = Vec::new();
            let mut stub = StubBackend::new();
            for (i, step) in script.iter().enumerate() {
                let attempt = i + 1;
                let (text, finish_reason) = match step {
                    Step::Degenerate => ("ab = df['tier_1'].unique()\n".repeat(200), FinishReason::Length),
                    Step::NoCode => ("```\n```".to_string(), FinishReason::Stop),
                    _ => (format!("```python\n{}\n```", code(attempt)), FinishReason::Stop),
                };
                mock.push(MockRecord {
                    matcher: MockMatch::Turn {
                        question: "adversarial".into(),
                        attempt,
                    },
                    text,
                    finish_reason,
                    usage: None,
                });
                stub = match step {
                    Step::Runtime => stub.with(code(attempt), RunnerResponse::error(RunnerStatus::RuntimeError, "KeyError", "KeyError: 'x'")),
                    Step::Syntax => stub.with(code(attempt), RunnerResponse::error(RunnerStatus::CompileError, "SyntaxError", "SyntaxError: invalid syntax")),
                    Step::Timeout => stub.with_timeout(code(attempt)),
                    Step::Success => stub.with(code(attempt), RunnerResponse::ok(format!("{attempt}"))),
                    Step::Degenerate | Step::NoCode => stub,
                };
            }
            let config = PipelineConfig {
                max_repairs,
                ..PipelineConfig::default()
            };
            // Identical prompts recur across cases, so completions must not be cached.
            let p = pipeline_with_cache(
                Arc::new(MockBackend::new(mock)),
                Arc::new(stub),
                cache.path(),
                config,
                ResponseCache::disabled(),
            );
            let task = Task {
                question_id: "adv".into(),
                question: "adversarial".into(),
                dataset_id: "069_Taxonomy".into(),
            };
            let r = p.answer_question(&task, Variant::Full).map_err(|e| TestCaseError::fail(e.to_string()))?;
            runs.set(runs.get() + 1);

            let success_at = if succeed { Some(failures.len() + 1) } else { None };
            let budget = 1 + max_repairs;
            let expected = success_at.map_or(budget, |s| s.min(budget));
            prop_assert!(r.attempts.len() <= budget);
            prop_assert_eq!(r.attempts.len(), expected);
            prop_assert!(check_attempt_shape(&r));
            for a in &r.attempts {
                prop_assert_eq!(a.prompt.history_len, a.attempt_index - 1);
            }
            let answered = success_at.is_some_and(|s| s <= budget);
            prop_assert_eq!(r.status == RunStatus::Answered, answered);
            if answered {
                prop_assert_eq!(r.final_answer_text.clone(), Some(format!("{expected}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let runs = runs.get();
    Ok(format!("{runs} adversarial scripts, max_repairs 0..=3"))
}

// ------------------------------------------------------------- comparator

/// Exact two-decimal rounding, half to even, of the binary value of `x`.
fn round2_oracle(x: f64) -> BigInt {
    let scaled = BigRational::from_float(x).unwrap() * BigRational::from_integer(BigInt::from(100));
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let f = floor.to_integer();
    match frac.cmp(&BigRational::new(BigInt::from(1), BigInt::from(2))) {
        Ordering::Less => f,
        Ordering::Greater => f + 1,
        Ordering::Equal if (&f % BigInt::from(2)).is_zero() => f,
        Ordering::Equal => f + 1,
    }
}

fn category_oracle(s: &str) -> String {
    let t = s.trim();
    let t = if t.len() >= 2 && ((t.starts_with('\'') && t.ends_with('\'')) || (t.starts_with('"') && t.ends_with('"'))) {
        &t[1..t.len() - 1]
    } else {
        t
    };
    t.trim().to_lowercase()
}

/// Pairs elements off one at a time.
fn multiset_oracle<T>(a: &[T], b: &[T], eq: impl Fn(&T, &T) -> bool) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| match (0..b.len()).find(|&j| !used[j] && eq(x, &b[j])) {
        Some(j) => {
            used[j] = true;
            true
        }
        None => false,
    })
}

fn compare_oracle(a: &TypedAnswer, b: &TypedAnswer) -> bool {
    use TypedAnswer::*;
    match (a, b) {
        (Boolean(x), Boolean(y)) => x == y,
        (Number(x), Number(y)) => round2_oracle(*x) == round2_oracle(*y),
        (Category(x), Category(y)) => category_oracle(x) == category_oracle(y),
        (ListNumber(x), ListNumber(y)) => multiset_oracle(x, y, |p, q| round2_oracle(*p) == round2_oracle(*q)),
        (ListCategory(x), ListCategory(y)) => multiset_oracle(x, y, |p, q| category_oracle(p) == category_oracle(q)),
        _ => false,
    }
}

/// Numbers clustered around two-decimal rounding boundaries.
fn number() -> impl Strategy<Value = f64> {
    (-2000i64..2000, prop_oneof![Just(0.0), Just(0.005), Just(-0.005), Just(0.004999), Just(0.0051), -0.01f64..0.01])
        .prop_map(|(cents, d)| cents as f64 / 100.0 + d)
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("cat".to_string()),
        Just("Cat".to_string()),
        Just(" dog ".to_string()),
        Just("DOG".to_string()),
        Just("'cat'".to_string()),
        Just("New York".to_string()),
        "[a-c]{1,3}",
    ]
}

fn answer() -> impl Strategy<Value = TypedAnswer> {
    prop_oneof![
        any::<bool>().prop_map(TypedAnswer::Boolean),
        number().prop_map(TypedAnswer::Number),
        word().prop_map(TypedAnswer::Category),
        prop::collection::vec(word(), 0..4).prop_map(TypedAnswer::ListCategory),
        prop::collection::vec(number(), 0..4).prop_map(TypedAnswer::ListNumber),
    ]
}

/// A second answer that is often, but not always, equivalent to the first.
fn near(a: &TypedAnswer) -> BoxedStrategy<TypedAnswer> {
    use TypedAnswer::*;
    match a.clone() {
        Number(x) => (prop_oneof![Just(0.0), Just(0.001), Just(-0.004), Just(0.006), -0.01f64..0.01])
            .prop_map(move |d| Number(x + d))
            .boxed(),
        ListNumber(v) => (Just(v), any::<prop::sample::Index>(), -0.008f64..0.008)
            .prop_map(|(mut v, i, d)| {
                if !v.is_empty() {
                    let k = i.index(v.len());
                    v[k] += d;
                    v.rotate_left(k);
                }
                ListNumber(v)
            })
            .boxed(),
        ListCategory(v) => (Just(v), any::<prop::sample::Index>(), word(), any::<bool>())
            .prop_map(|(mut v, i, w, replace)| {
                if !v.is_empty() {
                    let k = i.index(v.len());
                    if replace {
                        v[k] = w;
                    } else {
                        v[k] = v[k].to_uppercase();
                    }
                    v.reverse();
                }
                ListCategory(v)
            })
            .boxed(),
        Category(_) => word().prop_map(Category).boxed(),
        other => prop_oneof![Just(other), answer()].boxed(),
    }
}

fn comparator() -> Result<String, String> {
    runner(500)
        .run(&(answer(), answer()), |(a, b)| {
            prop_assert!(compare(&a, &a), "not reflexive: {:?}", a);
            prop_assert_eq!(compare(&a, &b), compare(&b, &a));
            prop_assert!(!compare(&TypedAnswer::Failed, &a));
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let agree = Cell::new(0usize);
    let equal = Cell::new(0usize);
    runner(500)
        .run(&answer().prop_flat_map(|a| (Just(a.clone()), near(&a))), |(a, b)| {
            let want = compare_oracle(&a, &b);
            prop_assert_eq!(compare(&a, &b), want, "{:?} vs {:?}", a, b);
            agree.set(agree.get() + 1);
            equal.set(equal.get() + usize::from(want));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let (agree, equal) = (agree.get(), equal.get());
    ensure(equal > 50 && equal < agree - 50, format!("oracle pairs too one-sided: {equal}/{agree} equal"))?;
    Ok(format!("500 reflexive/symmetric cases; {agree} oracle pairs ({equal} equivalent)"))
}

// ----------------------------------------------------------------- report

fn synthetic_attempt(index: usize, class: Option<ErrorClass>) -> AttemptRecord {
    AttemptRecord {
        attempt_index: index,
        prompt: RenderedPrompt {
            text: String::new(),
            kind: if index == 1 { PromptKind::Codegen } else { PromptKind::Repair },
            question: String::new(),
            dataset_id: String::new(),
            history_len: index - 1,
        },
        completion: Completion {
            text: String::new(),
            finish_reason: FinishReason::Stop,
            prompt_digest: String::new(),
            usage: None,
        },
        code: None,
        outcome: Some(ExecutionOutcome {
            status: if class.is_some() { ExecStatus::Error } else { ExecStatus::Success },
            answer_text: if class.is_some() { String::new() } else { "ok".into() },
            error_class: class.clone(),
            error_type: String::new(),
            error_message: String::new(),
            error_detail: String::new(),
            duration_ms: 0,
        }),
        error_message: class.as_ref().map(|c| c.to_string()),
        error_class: class,
    }
}

fn outcome_class() -> impl Strategy<Value = Option<ErrorClass>> {
    prop_oneof![
        3 => Just(None),
        2 => prop_oneof![Just("KeyError"), Just("ValueError"), Just("NameError"), Just("FileNotFoundError")]
            .prop_map(|s| Some(ErrorClass::runtime(s))),
        1 => Just(Some(ErrorClass::new(ErrorTag::Syntax))),
        1 => Just(Some(ErrorClass::new(ErrorTag::DegenerateLoop))),
        1 => Just(Some(ErrorClass::new(ErrorTag::Timeout))),
    ]
}

fn synthetic_records() -> impl Strategy<Value = Vec<RunRecord>> {
    (0usize..=3).prop_flat_map(|max_repairs| {
        prop::collection::vec(prop::collection::vec(outcome_class(), 1 + max_repairs), 0..40).prop_map(move |runs| {
            runs.into_iter()
                .enumerate()
                .map(|(n, script)| {
                    let mut attempts = Vec::new();
                    for (i, class) in script.into_iter().enumerate() {
                        let done = class.is_none();
                        attempts.push(synthetic_attempt(i + 1, class));
                        if done {
                            break;
                        }
                    }
                    let answered = attempts.last().is_some_and(|a| a.succeeded());
                    RunRecord {
                        question_id: n.to_string(),
                        question: String::new(),
                        dataset_id: String::new(),
                        variant: Variant::Full,
                        attempts,
                        final_answer_text: answered.then(|| "ok".into()),
                        status: if answered { RunStatus::Answered } else { RunStatus::Failed },
                        total_duration_ms: 0,
                        max_repairs,
                        diagnostic: None,
                    }
                })
                .collect()
        })
    })
}

fn report_flow() -> Result<String, String> {
    let sets = Cell::new(0usize);
    runner(300)
        .run(&(synthetic_records(), any::<bool>()), |(records, paper_compat)| {
            let opts = ReportOptions { paper_compat };
            let rows = error_table(&records, opts);
            let failing_attempts: usize = records
                .iter()
                .map(|r| r.attempts.iter().filter(|a| !a.succeeded()).count())
                .sum();
            for granularity in [Granularity::Coarse, Granularity::Fine] {
                let flows = transitions(&records, granularity, opts);
                prop_assert_eq!(flows.iter().map(|t| t.count).sum::<usize>(), failing_attempts);
                for (i, row) in rows.iter().enumerate() {
                    let from: Vec<_> = flows.iter().filter(|t| t.from_iteration == row.iteration).collect();
                    let resolved: usize = from.iter().filter(|t| t.to_class == RESOLVED).map(|t| t.count).sum();
                    let exhausted: usize = from.iter().filter(|t| t.to_class == EXHAUSTED).map(|t| t.count).sum();
                    let onward: usize = from
                        .iter()
                        .filter(|t| t.to_class != RESOLVED && t.to_class != EXHAUSTED)
                        .map(|t| t.count)
                        .sum();
                    let next = rows.get(i + 1).map_or(0, |r| r.total);
                    prop_assert_eq!(row.total, resolved + onward + exhausted);
                    prop_assert_eq!(onward, next);
                    if i + 1 < rows.len() {
                        prop_assert_eq!(exhausted, 0);
                    }
                }
            }
            for row in &rows {
                prop_assert_eq!(row.total, row.runtime + row.degenerate_loop + row.syntax + row.timeout);
                if paper_compat {
                    prop_assert_eq!(row.timeout, 0);
                }
            }
            let ba = before_after(&records);
            prop_assert_eq!(ba.initial_errors, rows.first().map_or(0, |r| r.total));
            sets.set(sets.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let sets = sets.get();
    Ok(format!("{sets} random record sets, coarse and fine flows"))
}

// ---------------------------------------------------------------- prompts

#[derive(Deserialize)]
struct PromptCase {
    name: String,
    dataset_id: String,
    question: String,
    history: Vec<(String, String)>,
}

fn prompt_goldens() -> Result<String, String> {
    let read = |rel: String| std::fs::read_to_string(fixtures().join(rel)).unwrap();
    let cases: Vec<PromptCase> = serde_json::from_str(&read("prompt_cases.json".into())).unwrap();
    for c in &cases {
        let schema = read(format!("golden/schemas/{}.txt", c.dataset_id));
        let codegen = build_codegen_prompt(&c.question, &schema, &c.dataset_id);
        ensure(codegen.text == read(format!("golden/prompts/{}_codegen.txt", c.name)), format!("{} codegen", c.name))?;
        let history: Vec<FailedAttempt> = c.history.iter().map(|(code, e)| FailedAttempt::new(code, e)).collect();
        let repair = build_repair_prompt(&c.question, &schema, &c.dataset_id, &history).map_err(|e| e.to_string())?;
        ensure(repair.text == read(format!("golden/prompts/{}_repair.txt", c.name)), format!("{} repair", c.name))?;
    }
    Ok(format!("{} questions, codegen + repair byte-exact", cases.len()))
}

fn main() {
    let criteria: [(&str, Option<Duration>, Check); 7] = [
        ("golden schema", Some(Duration::from_secs(1)), golden_schema),
        ("normalization suite", Some(Duration::from_secs(5)), normalization),
        ("end-to-end mock run", Some(Duration::from_secs(10)), end_to_end),
        ("loop budget property", None, loop_budget),
        ("comparator suite", None, comparator),
        ("report flow conservation", None, report_flow),
        ("prompt goldens", None, prompt_goldens),
    ];
    println!("\nrunning {} acceptance criteria", criteria.len());
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = started.elapsed();
        let over = limit.filter(|l| elapsed > *l);
        let timing = match limit {
            Some(l) => format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        match (&result, over) {
            (Ok(detail), None) => println!("PASS  {name}: {detail} ({timing})"),
            (Ok(detail), Some(_)) => {
                failed += 1;
                println!("FAIL  {name}: over time limit; {detail} ({timing})");
            }
            (Err(e), _) => {
                failed += 1;
                println!("FAIL  {name}: {e} ({timing})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed\n", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

