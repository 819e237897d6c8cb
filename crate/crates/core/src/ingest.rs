//! Dataset loading and column-name normalization.
//!
//! Datasets live under a data directory as `<data_dir>/<dataset_id>/all.parquet`
//! with an optional 20-row `sample.parquet` next to it. Delimited text
//! (`all.csv`) is accepted as well; its columns are typed `object` since the
//! format declares no types.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arrow_array::cast::AsArray;
use arrow_array::timezone::Tz;
use arrow_array::types::*;
use arrow_array::{Array, ArrayRef, RecordBatch, StringArray};
use arrow_schema::{DataType, Field, Schema, SchemaRef, TimeUnit};
use chrono::{DateTime, NaiveDateTime, TimeZone};
use parquet::arrow::arrow_reader::ParquetRecordBatchReaderBuilder;
use parquet::arrow::ArrowWriter;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pyrepr;

/// Number of rows in the lite variant when it has to be derived.
pub const LITE_ROWS: usize = 20;

/// Name given to columns whose header normalizes to nothing.
pub const PLACEHOLDER_COLUMN: &str = "column";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Lite,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Lite => "lite",
        })
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("{0} has no columns")]
    EmptyTable(PathBuf),
    #[error("dataset {0} not found")]
    DatasetMissing(String),
}

impl IngestError {
    fn unreadable(path: &Path, reason: impl ToString) -> Self {
        IngestError::UnreadableFile {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }
}

/// A single value. `Null` and `Str("")` are different values.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    /// Pandas-style rendering, e.g. `2010-10-25 00:00:00+00:00`.
    Timestamp(String),
    /// Struct/list/map value in its single-line Python literal form.
    Nested(String),
}

impl Cell {
    /// Nulls and float NaN are both missing values in pandas.
    pub fn is_null(&self) -> bool {
        match self {
            Cell::Null => true,
            Cell::Float(x) => x.is_nan(),
            _ => false,
        }
    }

    /// Literal form used inside nested values (`'text'`, `None`, `5.0`).
    fn python_literal(&self) -> String {
        match self {
            Cell::Null => "None".to_string(),
            Cell::Str(s) => pyrepr::str_repr(s),
            Cell::Timestamp(s) => format!("Timestamp({})", pyrepr::str_repr(s)),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => f.write_str("None"),
            Cell::Bool(b) => f.write_str(pyrepr::bool_repr(*b)),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::UInt(u) => write!(f, "{u}"),
            Cell::Float(x) => f.write_str(&pyrepr::f64_repr(*x)),
            Cell::Str(s) | Cell::Timestamp(s) | Cell::Nested(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Header as it appeared in the file.
    pub source_name: String,
    pub type_label: String,
    pub values: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    pub dataset_id: String,
    pub columns: Vec<Column>,
    pub row_count: usize,
    pub variant: Variant,
}

impl DatasetTable {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Lowercases a header, turns every run of non-word characters into a single
/// underscore and drops trailing non-word characters.
pub fn normalize_column_name(raw: &str) -> String {
    let trimmed = raw.trim_end_matches(|c: char| !is_word(c));
    let mut out = String::with_capacity(trimmed.len());
    let mut pending_sep = false;
    for c in trimmed.chars() {
        if is_word(c) {
            if pending_sep {
                out.push('_');
                pending_sep = false;
            }
            out.push(c.to_ascii_lowercase());
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        PLACEHOLDER_COLUMN.to_string()
    } else {
        out
    }
}

/// The k-th repeat of a name (k >= 2) becomes `name_k`. If that is taken by
/// another column, k keeps increasing until the name is free.
pub fn dedupe_column_names<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    let reserved: HashSet<&str> = names.iter().map(AsRef::as_ref).collect();
    let mut used: HashSet<String> = HashSet::with_capacity(names.len());
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::with_capacity(names.len());
    for name in names.iter().map(AsRef::as_ref) {
        let occurrence = seen.entry(name).or_insert(0);
        *occurrence += 1;
        if *occurrence == 1 && !used.contains(name) {
            used.insert(name.to_string());
            out.push(name.to_string());
            continue;
        }
        let mut k = (*occurrence).max(2);
        let renamed = loop {
            let candidate = format!("{name}_{k}");
            if !used.contains(&candidate) && !reserved.contains(candidate.as_str()) {
                break candidate;
            }
            k += 1;
        };
        used.insert(renamed.clone());
        out.push(renamed);
    }
    out
}

/// Normalizes then deduplicates a header row.
pub fn normalize_headers<S: AsRef<str>>(raw: &[S]) -> Vec<String> {
    let normalized: Vec<String> = raw.iter().map(|s| normalize_column_name(s.as_ref())).collect();
    dedupe_column_names(&normalized)
}

/// Loads a dataset file.
///
/// For [`Variant::Lite`], `path` names the full-data file: a sibling
/// `sample.parquet`/`sample.csv` is loaded as-is when present, otherwise the
/// first 20 rows of `path` are used.
pub fn load_dataset(path: &Path, dataset_id: &str, variant: Variant) -> Result<DatasetTable, IngestError> {
    let (source, limit) = match variant {
        Variant::Full => (path.to_path_buf(), None),
        Variant::Lite => match sample_sibling(path) {
            Some(sample) => (sample, None),
            None => (path.to_path_buf(), Some(LITE_ROWS)),
        },
    };
    let raw = read_columns(&source, limit)?;
    if raw.is_empty() {
        return Err(IngestError::EmptyTable(source));
    }
    let names = normalize_headers(&raw.iter().map(|c| c.header.as_str()).collect::<Vec<_>>());
    let row_count = raw.first().map_or(0, |c| c.values.len());
    let columns = raw
        .into_iter()
        .zip(names)
        .map(|(c, name)| Column {
            name,
            source_name: c.header,
            type_label: c.type_label,
            values: c.values,
        })
        .collect();
    Ok(DatasetTable {
        dataset_id: dataset_id.to_string(),
        columns,
        row_count,
        variant,
    })
}

const SUPPORTED_EXTENSIONS: [&str; 3] = ["parquet", "csv", "tsv"];

fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

fn sample_sibling(path: &Path) -> Option<PathBuf> {
    let dir = path.parent()?;
    SUPPORTED_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("sample.{ext}")))
        .find(|p| p.is_file() && p != path)
}

struct RawColumn {
    header: String,
    type_label: String,
    values: Vec<Cell>,
}

fn read_columns(path: &Path, limit: Option<usize>) -> Result<Vec<RawColumn>, IngestError> {
    match extension(path).as_deref() {
        Some("parquet") => read_parquet(path, limit),
        Some("csv") => read_delimited(path, b',', limit),
        Some("tsv") => read_delimited(path, b'\t', limit),
        _ => Err(IngestError::unreadable(path, "unsupported file format")),
    }
}

fn open_parquet(path: &Path, limit: Option<usize>) -> Result<(SchemaRef, Vec<RecordBatch>), IngestError> {
    let file = File::open(path).map_err(|e| IngestError::unreadable(path, e))?;
    let mut builder = ParquetRecordBatchReaderBuilder::try_new(file).map_err(|e| IngestError::unreadable(path, e))?;
    if let Some(n) = limit {
        builder = builder.with_limit(n);
    }
    let schema = builder.schema().clone();
    let reader = builder.build().map_err(|e| IngestError::unreadable(path, e))?;
    let batches = reader
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::unreadable(path, e))?;
    Ok((schema, batches))
}

fn read_parquet(path: &Path, limit: Option<usize>) -> Result<Vec<RawColumn>, IngestError> {
    let (schema, batches) = open_parquet(path, limit)?;
    let mut columns: Vec<RawColumn> = schema
        .fields()
        .iter()
        .map(|f| RawColumn {
            header: f.name().clone(),
            type_label: type_label(f.data_type()),
            values: Vec::new(),
        })
        .collect();
    for batch in &batches {
        for (col, array) in columns.iter_mut().zip(batch.columns()) {
            col.values.extend(array_cells(array.as_ref()).map_err(|e| IngestError::unreadable(path, e))?);
        }
    }
    Ok(columns)
}

fn read_delimited(path: &Path, delimiter: u8, limit: Option<usize>) -> Result<Vec<RawColumn>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(path)
        .map_err(|e| IngestError::unreadable(path, e))?;
    let headers = reader.headers().map_err(|e| IngestError::unreadable(path, e))?.clone();
    let mut columns: Vec<RawColumn> = headers
        .iter()
        .filter(|h| !(headers.len() == 1 && h.is_empty()))
        .map(|h| RawColumn {
            header: h.to_string(),
            type_label: "object".to_string(),
            values: Vec::new(),
        })
        .collect();
    for (i, record) in reader.records().enumerate() {
        if limit.is_some_and(|n| i >= n) {
            break;
        }
        let record = record.map_err(|e| IngestError::unreadable(path, e))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.values.push(if field.is_empty() {
                Cell::Null
            } else {
                Cell::Str(field.to_string())
            });
        }
    }
    Ok(columns)
}

/// Pandas dtype name for an arrow type, as pandas reports it after reading.
pub fn type_label(dt: &DataType) -> String {
    match dt {
        DataType::Boolean => "bool".into(),
        DataType::Int8 => "int8".into(),
        DataType::Int16 => "int16".into(),
        DataType::Int32 => "int32".into(),
        DataType::Int64 => "int64".into(),
        DataType::UInt8 => "uint8".into(),
        DataType::UInt16 => "uint16".into(),
        DataType::UInt32 => "uint32".into(),
        DataType::UInt64 => "uint64".into(),
        DataType::Float16 => "float16".into(),
        DataType::Float32 => "float32".into(),
        DataType::Float64 => "float64".into(),
        DataType::Dictionary(_, _) => "category".into(),
        DataType::Timestamp(unit, tz) => {
            let unit = match unit {
                TimeUnit::Second => "s",
                TimeUnit::Millisecond => "ms",
                TimeUnit::Microsecond => "us",
                TimeUnit::Nanosecond => "ns",
            };
            match tz {
                Some(tz) => format!("datetime64[{unit}, {tz}]"),
                None => format!("datetime64[{unit}]"),
            }
        }
        _ => "object".into(),
    }
}

fn array_cells(array: &dyn Array) -> Result<Vec<Cell>, String> {
    let n = array.len();
    macro_rules! prim {
        ($t:ty, $variant:ident, $conv:expr) => {{
            let a = array.as_primitive::<$t>();
            (0..n)
                .map(|i| if a.is_null(i) { Cell::Null } else { Cell::$variant($conv(a.value(i))) })
                .collect()
        }};
    }
    let cells = match array.data_type() {
        DataType::Null => vec![Cell::Null; n],
        DataType::Boolean => {
            let a = array.as_boolean();
            (0..n)
                .map(|i| if a.is_null(i) { Cell::Null } else { Cell::Bool(a.value(i)) })
                .collect()
        }
        DataType::Int8 => prim!(Int8Type, Int, i64::from),
        DataType::Int16 => prim!(Int16Type, Int, i64::from),
        DataType::Int32 => prim!(Int32Type, Int, i64::from),
        DataType::Int64 => prim!(Int64Type, Int, |v| v),
        DataType::UInt8 => prim!(UInt8Type, UInt, u64::from),
        DataType::UInt16 => prim!(UInt16Type, UInt, u64::from),
        DataType::UInt32 => prim!(UInt32Type, UInt, u64::from),
        DataType::UInt64 => prim!(UInt64Type, UInt, |v| v),
        DataType::Float16 => prim!(Float16Type, Float, |v| widen_f32(f32::from(v))),
        // float32 values keep their single-precision shortest digits
        DataType::Float32 => prim!(Float32Type, Float, widen_f32),
        DataType::Float64 => prim!(Float64Type, Float, |v| v),
        DataType::Utf8 => {
            let a = array.as_string::<i32>();
            (0..n)
                .map(|i| if a.is_null(i) { Cell::Null } else { Cell::Str(a.value(i).to_string()) })
                .collect()
        }
        DataType::LargeUtf8 => {
            let a = array.as_string::<i64>();
            (0..n)
                .map(|i| if a.is_null(i) { Cell::Null } else { Cell::Str(a.value(i).to_string()) })
                .collect()
        }
        DataType::Utf8View => {
            let a = array.as_string_view();
            (0..n)
                .map(|i| if a.is_null(i) { Cell::Null } else { Cell::Str(a.value(i).to_string()) })
                .collect()
        }
        DataType::Dictionary(_, _) => {
            let dict = array.as_any_dictionary();
            let values = array_cells(dict.values().as_ref())?;
            let keys = dict.normalized_keys();
            (0..n)
                .map(|i| if array.is_null(i) { Cell::Null } else { values[keys[i]].clone() })
                .collect()
        }
        DataType::Timestamp(unit, tz) => timestamp_cells(array, *unit, tz.as_deref())?,
        DataType::Date32 => {
            let a = array.as_primitive::<Date32Type>();
            (0..n)
                .map(|i| match a.value_as_date(i) {
                    Some(d) if !a.is_null(i) => Cell::Str(d.format("%Y-%m-%d").to_string()),
                    _ => Cell::Null,
                })
                .collect()
        }
        DataType::Date64 => {
            let a = array.as_primitive::<Date64Type>();
            (0..n)
                .map(|i| match a.value_as_date(i) {
                    Some(d) if !a.is_null(i) => Cell::Str(d.format("%Y-%m-%d").to_string()),
                    _ => Cell::Null,
                })
                .collect()
        }
        DataType::Struct(fields) => {
            let a = array.as_struct();
            let children = a
                .columns()
                .iter()
                .map(|c| array_cells(c.as_ref()))
                .collect::<Result<Vec<_>, _>>()?;
            (0..n)
                .map(|i| {
                    if a.is_null(i) {
                        Cell::Null
                    } else {
                        Cell::Nested(render_struct(fields.iter().map(|f| f.name()), children.iter().map(|c| &c[i])))
                    }
                })
                .collect()
        }
        DataType::List(_) => list_cells(array.as_list::<i32>().iter().collect())?,
        DataType::LargeList(_) => list_cells(array.as_list::<i64>().iter().collect())?,
        DataType::Map(_, _) => {
            let a = array.as_map();
            (0..n)
                .map(|i| {
                    if a.is_null(i) {
                        return Ok(Cell::Null);
                    }
                    let entry = a.value(i);
                    let keys = array_cells(entry.column(0).as_ref())?;
                    let vals = array_cells(entry.column(1).as_ref())?;
                    let body: Vec<String> = keys
                        .iter()
                        .zip(&vals)
                        .map(|(k, v)| format!("{}: {}", k.python_literal(), v.python_literal()))
                        .collect();
                    Ok(Cell::Nested(format!("{{{}}}", body.join(", "))))
                })
                .collect::<Result<_, String>>()?
        }
        other => {
            // TODO: decimal and binary columns render through the arrow debug formatter; map them to
            // Python `Decimal`/`bytes` reprs once a dataset needs them.
            let formatted: Vec<Cell> = (0..n)
                .map(|i| {
                    if array.is_null(i) {
                        Cell::Null
                    } else {
                        Cell::Str(format!("{:?}", array.slice(i, 1)))
                    }
                })
                .collect();
            log::warn!("column type {other} has no dedicated rendering");
            formatted
        }
    };
    Ok(cells)
}

fn widen_f32(v: f32) -> f64 {
    if v.is_finite() {
        pyrepr::f32_repr(v).parse().unwrap_or(v as f64)
    } else {
        v as f64
    }
}

fn render_struct<'a>(names: impl Iterator<Item = &'a String>, values: impl Iterator<Item = &'a Cell>) -> String {
    let body: Vec<String> = names
        .zip(values)
        .map(|(k, v)| format!("{}: {}", pyrepr::str_repr(k), v.python_literal()))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn list_cells(items: Vec<Option<ArrayRef>>) -> Result<Vec<Cell>, String> {
    items
        .into_iter()
        .map(|item| match item {
            None => Ok(Cell::Null),
            Some(values) => {
                let cells = array_cells(values.as_ref())?;
                let body: Vec<String> = cells.iter().map(Cell::python_literal).collect();
                Ok(Cell::Nested(format!("[{}]", body.join(", "))))
            }
        })
        .collect()
}

fn timestamp_cells(array: &dyn Array, unit: TimeUnit, tz: Option<&str>) -> Result<Vec<Cell>, String> {
    let n = array.len();
    let raw: Vec<Option<i64>> = match unit {
        TimeUnit::Second => array.as_primitive::<TimestampSecondType>().iter().collect(),
        TimeUnit::Millisecond => array.as_primitive::<TimestampMillisecondType>().iter().collect(),
        TimeUnit::Microsecond => array.as_primitive::<TimestampMicrosecondType>().iter().collect(),
        TimeUnit::Nanosecond => array.as_primitive::<TimestampNanosecondType>().iter().collect(),
    };
    let to_utc = |v: i64| -> Option<DateTime<chrono::Utc>> {
        match unit {
            TimeUnit::Second => DateTime::from_timestamp(v, 0),
            TimeUnit::Millisecond => DateTime::from_timestamp_millis(v),
            TimeUnit::Microsecond => DateTime::from_timestamp_micros(v),
            TimeUnit::Nanosecond => Some(DateTime::from_timestamp_nanos(v)),
        }
    };
    let zone: Option<Tz> = tz.map(|t| t.parse::<Tz>().map_err(|e| e.to_string())).transpose()?;
    let mut out = Vec::with_capacity(n);
    for v in raw {
        let Some(utc) = v.and_then(to_utc) else {
            out.push(Cell::Null);
            continue;
        };
        let text = match &zone {
            Some(z) => {
                let local = z.from_utc_datetime(&utc.naive_utc());
                let offset = local.format("%:z").to_string();
                format!("{}{}", pandas_naive(&local.naive_local()), offset)
            }
            None => pandas_naive(&utc.naive_utc()),
        };
        out.push(Cell::Timestamp(text));
    }
    Ok(out)
}

/// `str(pd.Timestamp)` without the offset: sub-second digits only when present.
fn pandas_naive(dt: &NaiveDateTime) -> String {
    let base = dt.format("%Y-%m-%d %H:%M:%S").to_string();
    let nanos = dt.and_utc().timestamp_subsec_nanos();
    if nanos == 0 {
        base
    } else if nanos % 1000 == 0 {
        format!("{base}.{:06}", nanos / 1000)
    } else {
        format!("{base}.{nanos:09}")
    }
}

/// Writes the parquet file a generated script runs against: the first `rows`
/// rows of `src` (all rows when `None`) under the normalized column names the
/// schema shows. Delimited sources become all-string columns.
pub fn write_execution_copy(src: &Path, dst: &Path, rows: Option<usize>) -> Result<(), IngestError> {
    let (schema, batches) = match extension(src).as_deref() {
        Some("parquet") => open_parquet(src, rows)?,
        Some("csv") | Some("tsv") => delimited_batch(src, rows)?,
        _ => return Err(IngestError::unreadable(src, "unsupported file format")),
    };
    if schema.fields().is_empty() {
        return Err(IngestError::EmptyTable(src.to_path_buf()));
    }
    let names = normalize_headers(&schema.fields().iter().map(|f| f.name().as_str()).collect::<Vec<_>>());
    let fields: Vec<Field> = schema
        .fields()
        .iter()
        .zip(names)
        .map(|(f, name)| f.as_ref().clone().with_name(name))
        .collect();
    let renamed = Arc::new(Schema::new_with_metadata(fields, HashMap::new()));

    let dir = dst.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| IngestError::unreadable(dst, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IngestError::unreadable(dst, e))?;
    let file = tmp.reopen().map_err(|e| IngestError::unreadable(dst, e))?;
    let mut writer = ArrowWriter::try_new(file, renamed.clone(), None).map_err(|e| IngestError::unreadable(dst, e))?;
    for b in batches {
        let b = RecordBatch::try_new(renamed.clone(), b.columns().to_vec()).map_err(|e| IngestError::unreadable(dst, e))?;
        writer.write(&b).map_err(|e| IngestError::unreadable(dst, e))?;
    }
    writer.close().map_err(|e| IngestError::unreadable(dst, e))?;
    tmp.persist(dst).map_err(|e| IngestError::unreadable(dst, e.error))?;
    Ok(())
}

fn delimited_batch(src: &Path, rows: Option<usize>) -> Result<(SchemaRef, Vec<RecordBatch>), IngestError> {
    let delimiter = if extension(src).as_deref() == Some("tsv") { b'\t' } else { b',' };
    let columns = read_delimited(src, delimiter, rows)?;
    let fields: Vec<Field> = columns.iter().map(|c| Field::new(&c.header, DataType::Utf8, true)).collect();
    let schema = Arc::new(Schema::new(fields));
    if columns.is_empty() {
        return Ok((schema, Vec::new()));
    }
    let arrays: Vec<ArrayRef> = columns
        .iter()
        .map(|c| {
            let values = c.values.iter().map(|v| match v {
                Cell::Str(s) => Some(s.as_str()),
                _ => None,
            });
            Arc::new(StringArray::from_iter(values)) as ArrayRef
        })
        .collect();
    let batch = RecordBatch::try_new(schema.clone(), arrays).map_err(|e| IngestError::unreadable(src, e))?;
    Ok((schema, vec![batch]))
}

/// `<root>/<dataset_id>/{all,sample}.{parquet,csv,tsv}` resolver.
#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn find(&self, dataset_id: &str, stem: &str) -> Option<PathBuf> {
        let dir = self.root.join(dataset_id);
        SUPPORTED_EXTENSIONS
            .iter()
            .map(|ext| dir.join(format!("{stem}.{ext}")))
            .find(|p| p.is_file())
    }

    pub fn full_path(&self, dataset_id: &str) -> Result<PathBuf, IngestError> {
        self.find(dataset_id, "all")
            .ok_or_else(|| IngestError::DatasetMissing(dataset_id.to_string()))
    }

    pub fn sample_path(&self, dataset_id: &str) -> Option<PathBuf> {
        self.find(dataset_id, "sample")
    }

    pub fn load(&self, dataset_id: &str, variant: Variant) -> Result<DatasetTable, IngestError> {
        load_dataset(&self.full_path(dataset_id)?, dataset_id, variant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_documented_examples() {
        assert_eq!(normalize_column_name("Col@"), "col");
        assert_eq!(normalize_column_name("date stayed"), "date_stayed");
        assert_eq!(normalize_column_name("num_helpful_votes"), "num_helpful_votes");
        assert_eq!(normalize_column_name("Unnamed: 7"), "unnamed_7");
    }

    #[test]
    fn collapses_separator_runs_and_drops_trailing() {
        assert_eq!(normalize_column_name("a  -  b"), "a_b");
        assert_eq!(normalize_column_name("Price ($)"), "price");
        assert_eq!(normalize_column_name("total   "), "total");
        assert_eq!(normalize_column_name("@lead"), "_lead");
        assert_eq!(normalize_column_name("Año"), "a_o");
    }

    #[test]
    fn empty_names_get_placeholder() {
        assert_eq!(normalize_column_name(""), "column");
        assert_eq!(normalize_column_name("@#!"), "column");
        assert_eq!(normalize_headers(&["", "?"]), vec!["column", "column_2"]);
    }

    #[test]
    fn dedupe_appends_occurrence_number() {
        assert_eq!(dedupe_column_names(&["col", "col"]), vec!["col", "col_2"]);
        assert_eq!(dedupe_column_names(&["a", "b"]), vec!["a", "b"]);
        assert_eq!(dedupe_column_names(&["x", "x", "x"]), vec!["x", "x_2", "x_3"]);
    }

    #[test]
    fn dedupe_skips_names_already_present() {
        assert_eq!(dedupe_column_names(&["col", "col", "col_2"]), vec!["col", "col_3", "col_2"]);
        let names = dedupe_column_names(&["a_2", "a", "a", "a"]);
        assert_eq!(names, vec!["a_2", "a", "a_3", "a_4"]);
    }

    #[test]
    fn colliding_pair_normalizes_then_dedupes() {
        assert_eq!(normalize_headers(&["col", "Col@"]), vec!["col", "col_2"]);
    }

    #[test]
    fn unsupported_extension_is_unreadable() {
        let err = load_dataset(Path::new("/nonexistent/data.xlsx"), "x", Variant::Full).unwrap_err();
        assert!(matches!(err, IngestError::UnreadableFile { .. }));
    }

    #[test]
    fn csv_loads_strings_and_nulls() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("all.csv");
        std::fs::write(&p, "Name,Score ($)\nann,3\n,4\n").unwrap();
        let t = load_dataset(&p, "d", Variant::Full).unwrap();
        assert_eq!(t.column_names().collect::<Vec<_>>(), vec!["name", "score"]);
        assert_eq!(t.row_count, 2);
        assert_eq!(t.columns[0].values, vec![Cell::Str("ann".into()), Cell::Null]);
        assert_eq!(t.columns[1].type_label, "object");
    }

    #[test]
    fn empty_csv_is_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("all.csv");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(load_dataset(&p, "d", Variant::Full), Err(IngestError::EmptyTable(_))));
    }

    #[test]
    fn type_labels_follow_pandas_names() {
        assert_eq!(type_label(&DataType::UInt32), "uint32");
        assert_eq!(type_label(&DataType::Boolean), "bool");
        assert_eq!(type_label(&DataType::Utf8), "object");
        assert_eq!(
            type_label(&DataType::Dictionary(Box::new(DataType::Int32), Box::new(DataType::Utf8))),
            "category"
        );
        assert_eq!(
            type_label(&DataType::Timestamp(TimeUnit::Nanosecond, Some("UTC".into()))),
            "datetime64[ns, UTC]"
        );
    }

    #[test]
    fn null_and_empty_string_differ() {
        assert_ne!(Cell::Null, Cell::Str(String::new()));
        assert!(Cell::Null.is_null());
        assert!(!Cell::Str(String::new()).is_null());
        assert!(Cell::Float(f64::NAN).is_null());
    }

    #[test]
    fn execution_copy_uses_normalized_headers() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("all.csv");
        std::fs::write(&src, "Unique ID,Col@,col\n1,a,\n2,b,x\n3,c,y\n").unwrap();
        let dst = dir.path().join("exec/d.parquet");
        write_execution_copy(&src, &dst, Some(2)).unwrap();
        let t = load_dataset(&dst, "d", Variant::Full).unwrap();
        assert_eq!(t.column_names().collect::<Vec<_>>(), ["unique_id", "col", "col_2"]);
        assert_eq!(t.row_count, 2);
        assert_eq!(t.columns[2].values, vec![Cell::Null, Cell::Str("x".into())]);
        // Source names in the copy are already normalized.
        assert!(t.columns.iter().all(|c| c.name == c.source_name));
    }
}
