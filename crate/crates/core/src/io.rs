//! Series file formats and CSV report tables.
//!
//! Two series formats are supported:
//!
//! * `long-csv`: header `t,row,col,value`, one line per cell, zero-based
//!   indices, rows in any order. Dimensions are inferred as `max index + 1`.
//! * `mkt-binary`: the bytes `MKT1`, then `T`, `p1`, `p2` as little-endian
//!   `u32`, then `T*p1*p2` little-endian `f64` values in (t, row-major) order.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::MatrixSeries;

const MAGIC: &[u8; 4] = b"MKT1";
const LONG_CSV_HEADER: [&str; 4] = ["t", "row", "col", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    LongCsv,
    MktBinary,
}

impl SeriesFormat {
    /// Guesses the format from a file extension: `.csv` is long-csv, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SeriesFormat::LongCsv,
            _ => SeriesFormat::MktBinary,
        }
    }
}

impl FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long-csv" | "csv" => Ok(SeriesFormat::LongCsv),
            "mkt-binary" | "mkt" | "binary" => Ok(SeriesFormat::MktBinary),
            other => Err(Error::Config(format!("unknown series format `{other}`"))),
        }
    }
}

impl fmt::Display for SeriesFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesFormat::LongCsv => "long-csv",
            SeriesFormat::MktBinary => "mkt-binary",
        })
    }
}

pub fn load_series(path: &Path, format: SeriesFormat) -> Result<MatrixSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        SeriesFormat::LongCsv => parse_long_csv(&bytes),
        SeriesFormat::MktBinary => parse_binary(&bytes),
    }
}

pub fn save_series(series: &MatrixSeries, path: &Path, format: SeriesFormat) -> Result<()> {
    let bytes = match format {
        SeriesFormat::LongCsv => encode_long_csv(series),
        SeriesFormat::MktBinary => encode_binary(series)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Saves a single matrix as a length-one series.
pub fn save_matrix(m: &DMatrix<f64>, path: &Path, format: SeriesFormat) -> Result<()> {
    save_series(&MatrixSeries::single(m.clone())?, path, format)
}

fn encode_long_csv(series: &MatrixSeries) -> Vec<u8> {
    let (_, p1, p2) = series.dims();
    let mut out = String::with_capacity(16 * series.len() * p1 * p2 + 32);
    out.push_str("t,row,col,value\n");
    for (t, m) in series.slices().iter().enumerate() {
        for r in 0..p1 {
            for c in 0..p2 {
                // `Display` for f64 prints the shortest string that parses back exactly.
                out.push_str(&format!("{t},{r},{c},{}\n", m[(r, c)]));
            }
        }
    }
    out.into_bytes()
}

fn parse_long_csv(bytes: &[u8]) -> Result<MatrixSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    if header.iter().ne(LONG_CSV_HEADER) {
        return Err(Error::Format(format!(
            "expected header `t,row,col,value`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut cells: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("record {}: {e}", line + 1)))?;
        if rec.len() != 4 {
            return Err(Error::Format(format!(
                "record {} has {} fields, expected 4",
                line + 1,
                rec.len()
            )));
        }
        let index = |i: usize| -> Result<usize> {
            rec[i].parse::<usize>().map_err(|_| {
                Error::Format(format!(
                    "record {}: `{}` is not a valid {} index",
                    line + 1,
                    &rec[i],
                    LONG_CSV_HEADER[i]
                ))
            })
        };
        let (t, r, c) = (index(0)?, index(1)?, index(2)?);
        let value: f64 = rec[3].parse().map_err(|_| {
            Error::Format(format!("record {}: `{}` is not a number", line + 1, &rec[3]))
        })?;
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite value at (t={t}, row={r}, col={c})"
            )));
        }
        cells.push((t, r, c, value));
    }
    if cells.is_empty() {
        return Err(Error::Format("long-csv file has no data rows".into()));
    }

    let n_t = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let p1 = cells.iter().map(|c| c.1).max().unwrap() + 1;
    let p2 = cells.iter().map(|c| c.2).max().unwrap() + 1;
    let total = n_t
        .checked_mul(p1)
        .and_then(|v| v.checked_mul(p2))
        .ok_or_else(|| Error::Format("inferred dimensions overflow".into()))?;
    let mut seen = vec![false; total];
    let mut slices = vec![DMatrix::<f64>::zeros(p1, p2); n_t];
    for &(t, r, c, v) in &cells {
        let flat = (t * p1 + r) * p2 + c;
        if seen[flat] {
            return Err(Error::Format(format!(
                "duplicate cell (t={t}, row={r}, col={c})"
            )));
        }
        seen[flat] = true;
        slices[t][(r, c)] = v;
    }
    if let Some(flat) = seen.iter().position(|s| !s) {
        let (t, rest) = (flat / (p1 * p2), flat % (p1 * p2));
        return Err(Error::Format(format!(
            "missing cell (t={t}, row={}, col={})",
            rest / p2,
            rest % p2
        )));
    }
    MatrixSeries::new(slices)
}

fn encode_binary(series: &MatrixSeries) -> Result<Vec<u8>> {
    let (n_t, p1, p2) = series.dims();
    let dim = |v: usize, name: &str| {
        u32::try_from(v).map_err(|_| Error::Parameter(format!("{name} = {v} exceeds u32")))
    };
    let mut out = Vec::with_capacity(16 + 8 * n_t * p1 * p2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(n_t, "T")?.to_le_bytes());
    out.extend_from_slice(&dim(p1, "p1")?.to_le_bytes());
    out.extend_from_slice(&dim(p2, "p2")?.to_le_bytes());
    for v in series.row_major_values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn parse_binary(bytes: &[u8]) -> Result<MatrixSeries> {
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "binary series too short ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic bytes {:?}, expected `MKT1`",
            &bytes[..4]
        )));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (n_t, p1, p2) = (word(4), word(8), word(12));
    if n_t == 0 || p1 == 0 || p2 == 0 {
        return Err(Error::Format(format!(
            "header declares empty dimensions T={n_t}, p1={p1}, p2={p2}"
        )));
    }
    let expected = n_t
        .checked_mul(p1)
        .and_then(|v| v.checked_mul(p2))
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(16))
        .ok_or_else(|| Error::Format("declared dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "binary series has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut values = bytes[16..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    let mut slices = Vec::with_capacity(n_t);
    for _ in 0..n_t {
        let data: Vec<f64> = values.by_ref().take(p1 * p2).collect();
        slices.push(DMatrix::from_row_slice(p1, p2, &data));
    }
    MatrixSeries::new(slices)
}

/// A single CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        // seeds are full-range u64; keep them exact as text
        Value::Text(v.to_string())
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Empty, Into::into)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(v) => f.write_str(&format_float(*v)),
            Value::Int(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
            Value::Empty => Ok(()),
        }
    }
}

/// One table row: ordered `(column, value)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style push.
    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.push(name, value);
        self
    }

    pub fn push(&mut self, name: &str, value: impl Into<Value>) {
        self.fields.push((name.to_string(), value.into()));
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.fields.iter().map(|(_, v)| v)
    }
}

/// `%.17g`-style rendering: 17 significant digits, trailing zeros trimmed.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes records as CSV with a header row.
pub fn write_table(rows: &[Record], path: &Path) -> Result<()> {
    write_table_with_comments(rows, &[], path)
}

/// Like [`write_table`], preceded by `# `-prefixed comment lines.
pub fn write_table_with_comments(rows: &[Record], comments: &[String], path: &Path) -> Result<()> {
    let bytes = render_table(rows, comments)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Renders the CSV bytes written by [`write_table_with_comments`].
pub fn render_table(rows: &[Record], comments: &[String]) -> Result<Vec<u8>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Validation("refusing to write an empty report".into()))?;
    let header: Vec<&str> = first.columns().collect();
    for (i, row) in rows.iter().enumerate() {
        if row.columns().ne(header.iter().copied()) {
            return Err(Error::Validation(format!(
                "record {i} has columns [{}], expected [{}]",
                row.columns().collect::<Vec<_>>().join(","),
                header.join(",")
            )));
        }
    }

    let mut out = Vec::new();
    for line in comments {
        for part in line.lines() {
            out.extend_from_slice(format!("# {part}\n").as_bytes());
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let fail = |e: csv::Error| Error::Validation(format!("csv encoding failed: {e}"));
    w.write_record(&header).map_err(fail)?;
    for row in rows {
        w.write_record(row.values().map(|v| v.to_string()))
            .map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| Error::Validation(format!("csv flush failed: {e}")))
}
