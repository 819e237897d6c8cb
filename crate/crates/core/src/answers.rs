//! Typed answers: parsing printed output, comparing against gold labels, and
//! scoring a run.
//!
//! Comparison rules: numbers match when both round to the same value at two
//! decimals, categories match after trimming and case folding, lists match as
//! multisets under the element rule, booleans match exactly. A failed
//! prediction never matches.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Variant;
use crate::pipeline::{RunRecord, RunStatus};
use crate::pyrepr::{bool_repr, str_repr};

pub const FAILED_TOKEN: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnswerType {
    Boolean,
    Number,
    Category,
    ListCategory,
    ListNumber,
}

impl AnswerType {
    pub const ALL: [AnswerType; 5] = [
        AnswerType::Boolean,
        AnswerType::Number,
        AnswerType::Category,
        AnswerType::ListCategory,
        AnswerType::ListNumber,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AnswerType::Boolean => "boolean",
            AnswerType::Number => "number",
            AnswerType::Category => "category",
            AnswerType::ListCategory => "list[category]",
            AnswerType::ListNumber => "list[number]",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown answer type {0:?}")]
pub struct UnknownAnswerType(pub String);

impl FromStr for AnswerType {
    type Err = UnknownAnswerType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "boolean" | "bool" => AnswerType::Boolean,
            "number" | "numeric" => AnswerType::Number,
            "category" | "string" => AnswerType::Category,
            "list[category]" | "list[string]" | "list[category/string]" => AnswerType::ListCategory,
            "list[number]" => AnswerType::ListNumber,
            _ => return Err(UnknownAnswerType(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "value")]
pub enum TypedAnswer {
    Boolean(bool),
    Number(f64),
    Category(String),
    ListCategory(Vec<String>),
    ListNumber(Vec<f64>),
    Failed,
}

impl TypedAnswer {
    pub fn answer_type(&self) -> Option<AnswerType> {
        Some(match self {
            TypedAnswer::Boolean(_) => AnswerType::Boolean,
            TypedAnswer::Number(_) => AnswerType::Number,
            TypedAnswer::Category(_) => AnswerType::Category,
            TypedAnswer::ListCategory(_) => AnswerType::ListCategory,
            TypedAnswer::ListNumber(_) => AnswerType::ListNumber,
            TypedAnswer::Failed => return None,
        })
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, TypedAnswer::Failed)
    }
}

fn number_text(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Canonical text, in the same shapes the generation prompt asks for.
impl fmt::Display for TypedAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedAnswer::Boolean(b) => f.write_str(bool_repr(*b)),
            TypedAnswer::Number(x) => f.write_str(&number_text(*x)),
            TypedAnswer::Category(s) => f.write_str(s),
            TypedAnswer::ListCategory(v) => {
                let items: Vec<String> = v.iter().map(|s| str_repr(s)).collect();
                write!(f, "[{}]", items.join(", "))
            }
            TypedAnswer::ListNumber(v) => {
                let items: Vec<String> = v.iter().map(|x| number_text(*x)).collect();
                write!(f, "[{}]", items.join(", "))
            }
            TypedAnswer::Failed => f.write_str(FAILED_TOKEN),
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "np.true_" => Some(true),
        "false" | "np.false_" => Some(false),
        _ => None,
    }
}

/// Accepts formatted numbers such as `$1,234.50`, `45%` or
/// `np.float64(3.5)`; never yields NaN or infinity.
pub fn parse_number(s: &str) -> Option<f64> {
    let mut t = s.trim();
    // Unwrap a constructor-style wrapper like `np.int64(3)`.
    if let (Some(open), true) = (t.find('('), t.ends_with(')')) {
        let head = &t[..open];
        if !head.is_empty() && head.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
            t = t[open + 1..t.len() - 1].trim();
        }
    }
    let negative_outside = t.starts_with('-') && t[1..].starts_with(|c: char| !c.is_ascii_digit() && c != '.');
    if negative_outside {
        t = &t[1..];
    }
    let t = t.trim_start_matches(|c: char| !(c.is_ascii_digit() || c == '-' || c == '+' || c == '.'));
    let t = t.trim_end_matches(|c: char| !(c.is_ascii_digit() || c == '.'));
    if t.is_empty() || !t.contains(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let cleaned: String = t.chars().filter(|&c| c != ',' && c != '_').collect();
    let value: f64 = cleaned.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    Some(if negative_outside { -value } else { value })
}

/// A plain numeric literal, without the formatting leniency of
/// [`parse_number`]. Used when inferring a type from bare text.
fn strict_number(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq)]
struct Element {
    text: String,
    quoted: bool,
}

/// Splits list text into elements. Brackets are optional; elements are
/// separated by top-level commas and may be single- or double-quoted with
/// backslash escapes.
fn split_list(s: &str) -> Option<Vec<Element>> {
    let t = s.trim();
    let inner = match (t.strip_prefix('['), t.strip_prefix('(')) {
        (Some(rest), _) => rest.strip_suffix(']')?,
        (None, Some(rest)) => rest.strip_suffix(')')?,
        _ => t,
    };
    let mut out = Vec::new();
    let mut chars = inner.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&first) = chars.peek() else { break };
        if first == '\'' || first == '"' {
            chars.next();
            let mut text = String::new();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '\\' => match chars.next()? {
                        'n' => text.push('\n'),
                        't' => text.push('\t'),
                        'r' => text.push('\r'),
                        'x' => {
                            let hex: String = [chars.next()?, chars.next()?].iter().collect();
                            text.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
                        }
                        other => text.push(other),
                    },
                    c if c == first => {
                        closed = true;
                        break;
                    }
                    c => text.push(c),
                }
            }
            if !closed {
                return None;
            }
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
            match chars.next() {
                None | Some(',') => {}
                Some(_) => return None,
            }
            out.push(Element { text, quoted: true });
        } else {
            let mut text = String::new();
            for c in chars.by_ref() {
                if c == ',' {
                    break;
                }
                text.push(c);
            }
            out.push(Element {
                text: text.trim().to_string(),
                quoted: false,
            });
        }
    }
    // A single unquoted element holding only whitespace-separated numbers is
    // a numpy-style listing such as `[1 2 3]`.
    if let [only] = out.as_slice() {
        let parts: Vec<&str> = only.text.split_whitespace().collect();
        if !only.quoted && parts.len() > 1 && parts.iter().all(|p| strict_number(p).is_some()) {
            out = parts
                .into_iter()
                .map(|p| Element {
                    text: p.to_string(),
                    quoted: false,
                })
                .collect();
        }
    }
    Some(out)
}

fn strip_quotes(s: &str) -> &str {
    let t = s.trim();
    for q in ['\'', '"'] {
        if t.len() >= 2 && t.starts_with(q) && t.ends_with(q) {
            return &t[1..t.len() - 1];
        }
    }
    t
}

/// Never fails: text that does not fit the declared type yields
/// [`TypedAnswer::Failed`]. Without a declared type the shape is inferred.
pub fn parse_answer(text: &str, declared: Option<AnswerType>) -> TypedAnswer {
    let t = text.trim();
    if t.is_empty() {
        return TypedAnswer::Failed;
    }
    let parsed = match declared {
        Some(AnswerType::Boolean) => parse_bool(t).map(TypedAnswer::Boolean),
        Some(AnswerType::Number) => parse_number(t).map(TypedAnswer::Number),
        Some(AnswerType::Category) => Some(TypedAnswer::Category(t.to_string())),
        Some(AnswerType::ListCategory) => {
            split_list(t).map(|els| TypedAnswer::ListCategory(els.into_iter().map(|e| e.text).collect()))
        }
        Some(AnswerType::ListNumber) => split_list(t).and_then(|els| {
            els.iter()
                .map(|e| parse_number(&e.text))
                .collect::<Option<Vec<_>>>()
                .map(TypedAnswer::ListNumber)
        }),
        None => Some(infer(t)),
    };
    parsed.unwrap_or(TypedAnswer::Failed)
}

fn infer(t: &str) -> TypedAnswer {
    if t.starts_with('[') && t.ends_with(']') {
        if let Some(els) = split_list(t) {
            let numbers: Option<Vec<f64>> =
                els.iter().map(|e| if e.quoted { None } else { strict_number(&e.text) }).collect();
            return match numbers {
                Some(v) => TypedAnswer::ListNumber(v),
                None => TypedAnswer::ListCategory(els.into_iter().map(|e| e.text).collect()),
            };
        }
    }
    if let Some(b) = parse_bool(t) {
        return TypedAnswer::Boolean(b);
    }
    if let Some(x) = strict_number(t) {
        return TypedAnswer::Number(x);
    }
    TypedAnswer::Category(t.to_string())
}

/// Two-decimal rounding key. Formatting rounds the exact binary value half
/// to even, like Python's `round(x, 2)`.
pub fn round2_key(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn category_key(s: &str) -> String {
    strip_quotes(s).trim().to_lowercase()
}

fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

pub fn compare(predicted: &TypedAnswer, gold: &TypedAnswer) -> bool {
    use TypedAnswer::*;
    match (predicted, gold) {
        (Boolean(a), Boolean(b)) => a == b,
        (Number(a), Number(b)) => round2_key(*a) == round2_key(*b),
        (Category(a), Category(b)) => category_key(a) == category_key(b),
        (ListCategory(a), ListCategory(b)) => {
            a.len() == b.len()
                && sorted(a.iter().map(|s| category_key(s)).collect::<Vec<_>>())
                    == sorted(b.iter().map(|s| category_key(s)).collect::<Vec<_>>())
        }
        (ListNumber(a), ListNumber(b)) => {
            a.len() == b.len()
                && sorted(a.iter().map(|x| round2_key(*x)).collect::<Vec<_>>())
                    == sorted(b.iter().map(|x| round2_key(*x)).collect::<Vec<_>>())
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub question_id: String,
    pub question: String,
    pub dataset_id: String,
    pub answer: String,
    pub sample_answer: String,
    pub declared_type: String,
}

impl GoldRecord {
    pub fn answer_type(&self) -> Result<AnswerType, UnknownAnswerType> {
        self.declared_type.parse()
    }

    pub fn answer_for(&self, subtask: Variant) -> &str {
        match subtask {
            Variant::Full => &self.answer,
            Variant::Lite => &self.sample_answer,
        }
    }
}

/// Row shape shared by gold files and question files. Answer columns are
/// optional so blind question files load through the same path.
#[derive(Debug, Deserialize)]
struct RawRow {
    #[serde(default, alias = "id")]
    question_id: Option<String>,
    question: String,
    #[serde(alias = "dataset")]
    dataset_id: String,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    sample_answer: Option<String>,
    #[serde(default, alias = "type")]
    declared_type: Option<String>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{path}: row {row}: {reason}")]
    Row { path: PathBuf, row: usize, reason: String },
}

fn row_err(path: &Path, row: usize, reason: impl ToString) -> LoadError {
    LoadError::Row {
        path: path.to_path_buf(),
        row,
        reason: reason.to_string(),
    }
}

/// Reads a CSV/TSV file with a header row, or JSON lines. A missing
/// `question_id` defaults to the zero-based row index.
fn load_rows(path: &Path) -> Result<Vec<(String, RawRow)>, LoadError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let mut rows = Vec::new();
    if ext == "jsonl" || ext == "json" {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.to_path_buf(), e))?;
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let value: serde_json::Value = serde_json::from_str(line).map_err(|e| row_err(path, i, e))?;
            let row: RawRow = serde_json::from_value(stringify_scalars(value)).map_err(|e| row_err(path, i, e))?;
            rows.push(row);
        }
    } else {
        let delimiter = if ext == "tsv" { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .from_path(path)
            .map_err(|e| LoadError::Io(path.to_path_buf(), std::io::Error::other(e)))?;
        for (i, row) in reader.deserialize::<RawRow>().enumerate() {
            rows.push(row.map_err(|e| row_err(path, i, e))?);
        }
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r.question_id.clone().filter(|q| !q.is_empty()).unwrap_or_else(|| i.to_string()), r))
        .collect())
}

/// JSON gold files sometimes carry answers as JSON numbers, booleans or
/// arrays; they are compared as text like everything else.
fn stringify_scalars(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| {
                    let v = match v {
                        Value::String(_) | Value::Null => v,
                        Value::Bool(b) => Value::String(bool_repr(b).to_string()),
                        other => Value::String(other.to_string()),
                    };
                    (k, v)
                })
                .collect(),
        ),
        other => other,
    }
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldRecord>, LoadError> {
    load_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, (question_id, r))| {
            let declared_type = r.declared_type.ok_or_else(|| row_err(path, i, "missing answer type"))?;
            declared_type.parse::<AnswerType>().map_err(|e| row_err(path, i, e))?;
            Ok(GoldRecord {
                question_id,
                question: r.question,
                dataset_id: r.dataset_id,
                answer: r.answer.unwrap_or_default(),
                sample_answer: r.sample_answer.unwrap_or_default(),
                declared_type,
            })
        })
        .collect()
}

/// Loads the questions of a gold-format file; answer columns are ignored.
pub fn load_questions(path: &Path) -> Result<Vec<crate::pipeline::Task>, LoadError> {
    Ok(load_rows(path)?
        .into_iter()
        .map(|(question_id, r)| crate::pipeline::Task {
            question_id,
            question: r.question,
            dataset_id: r.dataset_id,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeScore {
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
    pub per_type: BTreeMap<AnswerType, TypeScore>,
    /// Question ids scored incorrect, in record order.
    pub incorrect: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("records and gold do not join one-to-one: {0}")]
    JoinMismatch(String),
    #[error("gold answer for {question_id} ({declared_type}) does not parse: {text:?}")]
    GoldParse {
        question_id: String,
        declared_type: String,
        text: String,
    },
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups: Vec<&str> = ids.filter(|id| !seen.insert(*id)).collect();
    dups.sort_unstable();
    dups.dedup();
    dups
}

pub fn accuracy(records: &[RunRecord], gold: &[GoldRecord], subtask: Variant) -> Result<AccuracyReport, EvalError> {
    let dup_records = duplicates(records.iter().map(|r| r.question_id.as_str()));
    let dup_gold = duplicates(gold.iter().map(|g| g.question_id.as_str()));
    let by_id: HashMap<&str, &GoldRecord> = gold.iter().map(|g| (g.question_id.as_str(), g)).collect();
    let record_ids: HashSet<&str> = records.iter().map(|r| r.question_id.as_str()).collect();
    let mut missing_gold: Vec<&str> = record_ids.iter().copied().filter(|id| !by_id.contains_key(id)).collect();
    let mut missing_records: Vec<&str> = by_id.keys().copied().filter(|id| !record_ids.contains(id)).collect();
    missing_gold.sort_unstable();
    missing_records.sort_unstable();
    let mut problems = Vec::new();
    if !dup_records.is_empty() {
        problems.push(format!("duplicate record ids {dup_records:?}"));
    }
    if !dup_gold.is_empty() {
        problems.push(format!("duplicate gold ids {dup_gold:?}"));
    }
    if !missing_gold.is_empty() {
        problems.push(format!("no gold for {missing_gold:?}"));
    }
    if !missing_records.is_empty() {
        problems.push(format!("no record for {missing_records:?}"));
    }
    if !problems.is_empty() {
        return Err(EvalError::JoinMismatch(problems.join("; ")));
    }

    let mut per_type: BTreeMap<AnswerType, TypeScore> = BTreeMap::new();
    let mut correct = 0;
    let mut incorrect = Vec::new();
    for record in records {
        let g = by_id[record.question_id.as_str()];
        let gold_err = || EvalError::GoldParse {
            question_id: g.question_id.clone(),
            declared_type: g.declared_type.clone(),
            text: g.answer_for(subtask).to_string(),
        };
        let ty = g.answer_type().map_err(|_| gold_err())?;
        let expected = parse_answer(g.answer_for(subtask), Some(ty));
        if expected.is_failed() {
            return Err(gold_err());
        }
        let predicted = match (&record.status, &record.final_answer_text) {
            (RunStatus::Answered, Some(text)) => parse_answer(text, Some(ty)),
            _ => TypedAnswer::Failed,
        };
        let ok = compare(&predicted, &expected);
        let score = per_type.entry(ty).or_default();
        score.total += 1;
        if ok {
            score.correct += 1;
            correct += 1;
        } else {
            incorrect.push(record.question_id.clone());
        }
    }
    let n = records.len();
    Ok(AccuracyReport {
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        correct,
        n,
        per_type,
        incorrect,
    })
}

/// One answer per line in record order; failed runs print `FAILED`.
pub fn predictions_text(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        match (&r.status, &r.final_answer_text) {
            (RunStatus::Answered, Some(text)) => out.push_str(&text.replace(['\n', '\r'], " ")),
            _ => out.push_str(FAILED_TOKEN),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use TypedAnswer::*;

    #[test]
    fn parses_prompt_format_examples() {
        assert_eq!(parse_answer("True", None), Boolean(true));
        assert_eq!(parse_answer("[1, 2, 3]", None), ListNumber(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_answer("['cat', 'dog']", None), ListCategory(vec!["cat".into(), "dog".into()]));
        assert_eq!(parse_answer("Paris", None), Category("Paris".into()));
        assert_eq!(parse_answer("3.5", None), Number(3.5));
    }

    #[test]
    fn declared_type_drives_parsing() {
        assert_eq!(parse_answer("yes", Some(AnswerType::Boolean)), Failed);
        assert_eq!(parse_answer("false", Some(AnswerType::Boolean)), Boolean(false));
        assert_eq!(parse_answer("$1,234.50", Some(AnswerType::Number)), Number(1234.5));
        assert_eq!(parse_answer("45%", Some(AnswerType::Number)), Number(45.0));
        assert_eq!(parse_answer("np.float64(2.25)", Some(AnswerType::Number)), Number(2.25));
        assert_eq!(parse_answer("-$5", Some(AnswerType::Number)), Number(-5.0));
        assert_eq!(parse_answer("nan", Some(AnswerType::Number)), Failed);
        assert_eq!(parse_answer("123", Some(AnswerType::Category)), Category("123".into()));
        assert_eq!(
            parse_answer("['1', '2']", Some(AnswerType::ListNumber)),
            ListNumber(vec![1.0, 2.0])
        );
        assert_eq!(parse_answer("[1 2 3]", Some(AnswerType::ListNumber)), ListNumber(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_answer("[]", Some(AnswerType::ListCategory)), ListCategory(vec![]));
    }

    #[test]
    fn quoted_list_elements_keep_commas_and_escapes() {
        assert_eq!(
            parse_answer(r#"['a, b', "it's", 'x\'y']"#, None),
            ListCategory(vec!["a, b".into(), "it's".into(), "x'y".into()])
        );
        assert_eq!(parse_answer("['unterminated]", Some(AnswerType::ListCategory)), Failed);
    }

    #[test]
    fn comparison_rules() {
        assert!(compare(&Number(3.14159), &Number(3.14)));
        assert!(!compare(&Number(3.146), &Number(3.14)));
        assert!(compare(
            &ListCategory(vec!["dog".into(), "cat".into()]),
            &ListCategory(vec!["Cat".into(), "dog".into()])
        ));
        assert!(!compare(
            &ListCategory(vec!["dog".into(), "dog".into()]),
            &ListCategory(vec!["dog".into(), "cat".into()])
        ));
        assert!(!compare(&Boolean(true), &Category("yes".into())));
        assert!(compare(&Category("  Paris ".into()), &Category("paris".into())));
        assert!(!compare(&Failed, &Failed));
        assert!(compare(&Number(-0.001), &Number(0.0)));
    }

    #[test]
    fn round2_is_half_even_on_binary_values() {
        assert_eq!(round2_key(0.125), "0.12");
        assert_eq!(round2_key(0.375), "0.38");
        assert_eq!(round2_key(2.675), "2.67");
    }

    #[test]
    fn canonical_text_round_trips() {
        for a in [
            Boolean(false),
            Number(5.0),
            Number(-0.5),
            Category("Big Apple".into()),
            ListCategory(vec!["a'b".into(), "c\"d".into(), "e\\f".into()]),
            ListNumber(vec![1.0, 2.5]),
        ] {
            let back = parse_answer(&a.to_string(), a.answer_type());
            assert!(compare(&back, &a), "{a:?} -> {} -> {back:?}", a);
        }
    }

    #[test]
    fn answer_type_names() {
        assert_eq!("list[category]".parse::<AnswerType>(), Ok(AnswerType::ListCategory));
        assert_eq!("List[number]".parse::<AnswerType>(), Ok(AnswerType::ListNumber));
        assert_eq!("boolean".parse::<AnswerType>(), Ok(AnswerType::Boolean));
        assert!("tuple".parse::<AnswerType>().is_err());
    }
}
