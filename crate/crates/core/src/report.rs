//! Error-evolution analyses over finished runs: how many runs failed at each
//! attempt and with which class, how many first-attempt failures the repair
//! loop fixed, and where each failure went next.
//!
//! Everything here is computed from [`RunRecord`]s as persisted, so reports
//! can be regenerated from a `records.jsonl` at any time.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::exec::{ErrorClass, ErrorTag};
use crate::pipeline::{AttemptRecord, RunRecord, RunStatus};

pub const RESOLVED: &str = "Resolved";
pub const EXHAUSTED: &str = "Exhausted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Count timeouts as runtime errors, for the three-class layout.
    pub paper_compat: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorRow {
    pub iteration: usize,
    pub runtime: usize,
    pub degenerate_loop: usize,
    pub syntax: usize,
    pub timeout: usize,
    pub total: usize,
}

impl ErrorRow {
    fn add(&mut self, tag: ErrorTag) {
        match tag {
            ErrorTag::Runtime => self.runtime += 1,
            ErrorTag::DegenerateLoop => self.degenerate_loop += 1,
            ErrorTag::Syntax => self.syntax += 1,
            ErrorTag::Timeout => self.timeout += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeforeAfter {
    /// Runs whose first attempt failed.
    pub initial_errors: usize,
    /// Runs that ended without an answer.
    pub final_errors: usize,
}

impl fmt::Display for BeforeAfter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} → {}", self.initial_errors, self.final_errors)
    }
}

/// `count` failures at `from_iteration` of class `from_class` were followed
/// by `to_class`: the next attempt's error class, `Resolved`, or `Exhausted`
/// when no attempts were left.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorTransition {
    pub from_iteration: usize,
    pub from_class: String,
    pub to_class: String,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Granularity {
    /// One label per error class.
    Coarse,
    /// Runtime errors split by exception name.
    Fine,
}

fn effective_class(class: &ErrorClass, opts: ReportOptions) -> ErrorClass {
    if opts.paper_compat && class.tag == ErrorTag::Timeout {
        ErrorClass::runtime("TimeoutError")
    } else {
        class.clone()
    }
}

fn class_label(class: &ErrorClass, granularity: Granularity) -> String {
    match granularity {
        Granularity::Coarse => class.tag.label().to_string(),
        Granularity::Fine => class.to_string(),
    }
}

/// The class of a failed attempt, `None` for a successful one.
fn failure(attempt: &AttemptRecord, opts: ReportOptions) -> Option<ErrorClass> {
    if attempt.succeeded() {
        return None;
    }
    // An attempt without a class (should not occur) still counts as a
    // runtime failure so the totals stay consistent.
    let class = attempt
        .error_class
        .clone()
        .unwrap_or_else(|| ErrorClass::runtime("Exception"));
    Some(effective_class(&class, opts))
}

/// One row per attempt index up to the largest budget among `records`.
pub fn error_table(records: &[RunRecord], opts: ReportOptions) -> Vec<ErrorRow> {
    let iterations = records
        .iter()
        .map(|r| (1 + r.max_repairs).max(r.attempts.len()))
        .max()
        .unwrap_or(0);
    let mut rows: Vec<ErrorRow> = (1..=iterations)
        .map(|iteration| ErrorRow {
            iteration,
            ..ErrorRow::default()
        })
        .collect();
    for r in records {
        for (i, a) in r.attempts.iter().enumerate() {
            if let Some(class) = failure(a, opts) {
                rows[i].add(class.tag);
            }
        }
    }
    rows
}

pub fn before_after(records: &[RunRecord]) -> BeforeAfter {
    BeforeAfter {
        initial_errors: records
            .iter()
            .filter(|r| r.attempts.first().is_some_and(|a| !a.succeeded()))
            .count(),
        final_errors: records.iter().filter(|r| r.status == RunStatus::Failed).count(),
    }
}

pub fn transitions(records: &[RunRecord], granularity: Granularity, opts: ReportOptions) -> Vec<ErrorTransition> {
    let mut counts: BTreeMap<(usize, String, String), usize> = BTreeMap::new();
    for r in records {
        for (i, a) in r.attempts.iter().enumerate() {
            let Some(class) = failure(a, opts) else { continue };
            let to = match r.attempts.get(i + 1) {
                None => EXHAUSTED.to_string(),
                Some(next) => match failure(next, opts) {
                    None => RESOLVED.to_string(),
                    Some(next_class) => class_label(&next_class, granularity),
                },
            };
            *counts.entry((i + 1, class_label(&class, granularity), to)).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((from_iteration, from_class, to_class), count)| ErrorTransition {
            from_iteration,
            from_class,
            to_class,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: usize,
    pub options: ReportOptions,
    pub before_after: BeforeAfter,
    pub error_table: Vec<ErrorRow>,
    pub transitions: Vec<ErrorTransition>,
    pub runtime_transitions: Vec<ErrorTransition>,
}

pub fn build_report(records: &[RunRecord], opts: ReportOptions) -> Report {
    Report {
        runs: records.len(),
        options: opts,
        before_after: before_after(records),
        error_table: error_table(records, opts),
        transitions: transitions(records, Granularity::Coarse, opts),
        runtime_transitions: transitions(records, Granularity::Fine, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown report format {other:?} (expected json, markdown or csv)")),
        }
    }
}

/// JSON carries the whole report; markdown renders every table; CSV is the
/// per-iteration error table, one row per iteration.
pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Markdown => markdown(report),
        Format::Csv => csv_table(report),
    }
}

fn markdown(report: &Report) -> String {
    let timeout = !report.options.paper_compat;
    let mut out = String::new();
    let _ = writeln!(out, "## Errors before and after repair\n");
    let _ = writeln!(out, "| Runs | Before | After |");
    let _ = writeln!(out, "|---|---|---|");
    let _ = writeln!(
        out,
        "| {} | {} | {} |\n",
        report.runs, report.before_after.initial_errors, report.before_after.final_errors
    );

    let _ = writeln!(out, "## Error types per iteration\n");
    if timeout {
        let _ = writeln!(out, "| Iteration | Runtime | Degenerate Loop | Syntax | Timeout | Total |");
        let _ = writeln!(out, "|---|---|---|---|---|---|");
    } else {
        let _ = writeln!(out, "| Iteration | Runtime | Degenerate Loop | Syntax | Total |");
        let _ = writeln!(out, "|---|---|---|---|---|");
    }
    for row in &report.error_table {
        if timeout {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                row.iteration, row.runtime, row.degenerate_loop, row.syntax, row.timeout, row.total
            );
        } else {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.iteration, row.runtime, row.degenerate_loop, row.syntax, row.total
            );
        }
    }

    for (title, rows) in [
        ("Error transitions", &report.transitions),
        ("Runtime error transitions", &report.runtime_transitions),
    ] {
        let _ = writeln!(out, "\n## {title}\n");
        let _ = writeln!(out, "| From iteration | From | To | Count |");
        let _ = writeln!(out, "|---|---|---|---|");
        for t in rows {
            let _ = writeln!(out, "| {} | {} | {} | {} |", t.from_iteration, t.from_class, t.to_class, t.count);
        }
    }
    out
}

fn csv_table(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let timeout = !report.options.paper_compat;
    let mut header = vec!["iteration", "runtime", "degenerate_loop", "syntax"];
    if timeout {
        header.push("timeout");
    }
    header.push("total");
    w.write_record(&header).expect("in-memory csv write");
    for row in &report.error_table {
        let mut fields = vec![row.iteration, row.runtime, row.degenerate_loop, row.syntax];
        if timeout {
            fields.push(row.timeout);
        }
        fields.push(row.total);
        w.write_record(fields.iter().map(|f| f.to_string())).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}
