//! Column summaries rendered as the schema block of the generation prompt.
//!
//! A rendered schema looks like:
//!
//! ```text
//! Here are the columns for the dataset
//! Column Name: via_mobile, Data type -- bool, -- Example values: False, True, Total unique elements: 2
//! ```
//!
//! Examples are the first five distinct non-null values in row order. Whole
//! values are listed while the joined list stays within 100 characters; a
//! first value that alone exceeds the budget is cut to 97 characters plus
//! `...`.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DataDir, DatasetTable, IngestError, Variant};
use crate::util::{atomic_write, sha256_hex};

pub const HEADER: &str = "Here are the columns for the dataset";
pub const MAX_EXAMPLES: usize = 5;
pub const EXAMPLE_BUDGET: usize = 100;
const ELLIPSIS: &str = "...";
const SEPARATOR: &str = ", ";

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schemas are built from full data; got the {0} variant")]
    FullVariantRequired(Variant),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("schema cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub type_label: String,
    /// Up to five distinct values in first-occurrence order, untruncated.
    pub example_values: Vec<String>,
    /// Whether the rendered example list omits or cuts any of `example_values`.
    pub examples_truncated: bool,
    pub unique_count: usize,
}

impl ColumnSchema {
    /// The `Example values:` segment after applying the character budget.
    pub fn example_segment(&self) -> String {
        fit_examples(&self.example_values).0
    }

    pub fn render_line(&self) -> String {
        format!(
            "Column Name: {}, Data type -- {}, -- Example values: {}, Total unique elements: {}",
            self.name,
            self.type_label,
            self.example_segment(),
            self.unique_count
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub dataset_id: String,
    pub columns: Vec<ColumnSchema>,
}

fn display_text(cell: &crate::ingest::Cell) -> String {
    let text = cell.to_string();
    if text.contains(['\n', '\r']) {
        text.replace("\r\n", " ").replace(['\n', '\r'], " ")
    } else {
        text
    }
}

fn fit_examples(values: &[String]) -> (String, bool) {
    let mut segment = String::new();
    let mut len = 0;
    for (i, v) in values.iter().enumerate() {
        let added = v.chars().count() + if i == 0 { 0 } else { SEPARATOR.len() };
        if len + added > EXAMPLE_BUDGET {
            if i == 0 {
                let mut cut: String = v.chars().take(EXAMPLE_BUDGET - ELLIPSIS.len()).collect();
                cut.push_str(ELLIPSIS);
                return (cut, true);
            }
            return (segment, true);
        }
        if i > 0 {
            segment.push_str(SEPARATOR);
        }
        segment.push_str(v);
        len += added;
    }
    (segment, false)
}

/// Summarizes every column of a full-data table.
pub fn build_schema(table: &DatasetTable) -> Result<DatasetSchema, SchemaError> {
    if table.variant != Variant::Full {
        return Err(SchemaError::FullVariantRequired(table.variant));
    }
    let columns = table
        .columns
        .iter()
        .map(|col| {
            let mut distinct: HashSet<String> = HashSet::new();
            let mut examples = Vec::with_capacity(MAX_EXAMPLES);
            for cell in col.values.iter().filter(|c| !c.is_null()) {
                let text = display_text(cell);
                if distinct.contains(&text) {
                    continue;
                }
                if examples.len() < MAX_EXAMPLES {
                    examples.push(text.clone());
                }
                distinct.insert(text);
            }
            let examples_truncated = fit_examples(&examples).1;
            ColumnSchema {
                name: col.name.clone(),
                type_label: col.type_label.clone(),
                example_values: examples,
                examples_truncated,
                unique_count: distinct.len(),
            }
        })
        .collect();
    Ok(DatasetSchema {
        dataset_id: table.dataset_id.clone(),
        columns,
    })
}

/// Header line followed by one line per column; no trailing newline.
pub fn render_schema(schema: &DatasetSchema) -> String {
    let mut out = String::from(HEADER);
    for col in &schema.columns {
        out.push('\n');
        out.push_str(&col.render_line());
    }
    out
}

/// Rendered schemas keyed by dataset id, memoized in memory and optionally on
/// disk under `<cache_dir>/schemas/`.
///
/// A disk entry is `<id>.txt` (the rendered schema) plus `<id>.sha256`, the
/// digest of the full data file it was built from; a digest mismatch forces a
/// rebuild.
#[derive(Debug, Default)]
pub struct SchemaCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Arc<str>>>,
    builds: AtomicUsize,
}

impl SchemaCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(cache_dir.into().join("schemas")),
            ..Self::default()
        }
    }

    /// Number of schemas actually built (cache misses) by this instance.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::SeqCst)
    }

    pub fn get_or_build(&self, data: &DataDir, dataset_id: &str) -> Result<Arc<str>, SchemaError> {
        if let Some(hit) = self.memory.lock().expect("schema cache poisoned").get(dataset_id) {
            return Ok(hit.clone());
        }
        let full = data.full_path(dataset_id)?;
        let digest = sha256_hex(&std::fs::read(&full)?);

        let text: Arc<str> = match self.read_disk(dataset_id, &digest) {
            Some(text) => text.into(),
            None => {
                let table = crate::ingest::load_dataset(&full, dataset_id, Variant::Full)?;
                let rendered = render_schema(&build_schema(&table)?);
                self.builds.fetch_add(1, Ordering::SeqCst);
                if let Some(dir) = &self.dir {
                    atomic_write(&dir.join(format!("{dataset_id}.txt")), rendered.as_bytes())?;
                    atomic_write(&dir.join(format!("{dataset_id}.sha256")), digest.as_bytes())?;
                }
                rendered.into()
            }
        };
        self.memory
            .lock()
            .expect("schema cache poisoned")
            .insert(dataset_id.to_string(), text.clone());
        Ok(text)
    }

    fn read_disk(&self, dataset_id: &str, digest: &str) -> Option<String> {
        let dir = self.dir.as_ref()?;
        let stored = std::fs::read_to_string(dir.join(format!("{dataset_id}.sha256"))).ok()?;
        if stored.trim() != digest {
            return None;
        }
        std::fs::read_to_string(dir.join(format!("{dataset_id}.txt"))).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Cell, Column};

    fn table(values: Vec<Cell>, type_label: &str) -> DatasetTable {
        DatasetTable {
            dataset_id: "t".into(),
            row_count: values.len(),
            columns: vec![Column {
                name: "c".into(),
                source_name: "c".into(),
                type_label: type_label.into(),
                values,
            }],
            variant: Variant::Full,
        }
    }

    #[test]
    fn bool_column_renders_expected_line() {
        let t = table(
            [false, true, false, false].into_iter().map(Cell::Bool).collect(),
            "bool",
        );
        let mut s = build_schema(&t).unwrap();
        s.columns[0].name = "via_mobile".into();
        assert_eq!(s.columns[0].example_values, vec!["False", "True"]);
        assert_eq!(s.columns[0].unique_count, 2);
        assert_eq!(
            s.columns[0].render_line(),
            "Column Name: via_mobile, Data type -- bool, -- Example values: False, True, Total unique elements: 2"
        );
    }

    #[test]
    fn constant_column_has_one_example() {
        let t = table(vec![Cell::Str("SCD".into()); 7], "category");
        let s = build_schema(&t).unwrap();
        assert_eq!(s.columns[0].example_values, vec!["SCD"]);
        assert_eq!(s.columns[0].unique_count, 1);
    }

    #[test]
    fn nulls_are_skipped() {
        let t = table(vec![Cell::Null, Cell::Int(1), Cell::Float(f64::NAN), Cell::Int(1)], "float64");
        let s = build_schema(&t).unwrap();
        assert_eq!(s.columns[0].example_values, vec!["1"]);
        assert_eq!(s.columns[0].unique_count, 1);
    }

    #[test]
    fn lite_tables_are_rejected() {
        let mut t = table(vec![Cell::Int(1)], "int64");
        t.variant = Variant::Lite;
        assert!(matches!(build_schema(&t), Err(SchemaError::FullVariantRequired(Variant::Lite))));
    }

    #[test]
    fn long_first_value_is_cut_with_ellipsis() {
        let long = "x".repeat(150);
        let (seg, truncated) = fit_examples(&[long, "y".into()]);
        assert!(truncated);
        assert_eq!(seg.chars().count(), 100);
        assert!(seg.ends_with("x..."));
    }

    #[test]
    fn later_values_that_overflow_are_dropped_whole() {
        let vals: Vec<String> = (0..5).map(|i| format!("2010-10-2{i} 00:00:00+00:00")).collect();
        let (seg, truncated) = fit_examples(&vals);
        assert!(truncated);
        assert_eq!(seg.matches(", ").count(), 2);
        assert!(!seg.ends_with("..."));
    }

    #[test]
    fn exact_budget_fits() {
        let vals = vec!["a".repeat(49), "b".repeat(49)];
        let (seg, truncated) = fit_examples(&vals);
        assert_eq!(seg.len(), 100);
        assert!(!truncated);
    }

    #[test]
    fn budget_counts_characters_not_bytes() {
        let vals = vec!["é".repeat(60), "ü".repeat(30)];
        let (seg, truncated) = fit_examples(&vals);
        assert!(!truncated);
        assert_eq!(seg.chars().count(), 92);
    }

    #[test]
    fn one_column_renders_two_lines() {
        let s = build_schema(&table(vec![Cell::Int(3)], "int64")).unwrap();
        assert_eq!(render_schema(&s).lines().count(), 2);
    }

    #[test]
    fn embedded_newlines_stay_on_one_line() {
        let s = build_schema(&table(vec![Cell::Str("a\nb".into())], "object")).unwrap();
        assert_eq!(render_schema(&s).lines().count(), 2);
    }
}
