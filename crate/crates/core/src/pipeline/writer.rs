use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{Cell, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Option<OutputFormat> {
        match text.to_ascii_lowercase().as_str() {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Rounds half away from zero on the shortest decimal representation of
/// `x`, so `0.125` becomes `0.13` at two decimals.
pub fn round_half_up(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let text = format!("{}", x.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let mut digits: Vec<u8> =
        int_part.bytes().chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(decimals)).collect();
    if frac_part.len() > decimals && frac_part.as_bytes()[decimals] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::new();
    let negative = x < 0.0 && digits.iter().any(|&d| d != b'0');
    if negative {
        out.push('-');
    }
    out.push_str(std::str::from_utf8(&digits[..split]).expect("ascii digits"));
    if decimals > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&digits[split..]).expect("ascii digits"));
    }
    out
}

fn cell_text(cell: &Cell, decimals: Option<usize>) -> String {
    match (cell, decimals) {
        (Cell::Float(x), Some(d)) => round_half_up(*x, d),
        _ => cell.to_string(),
    }
}

/// CSV with a header row, LF endings and minimal RFC 4180 quoting. Float
/// cells are rounded when `decimals` is set.
pub fn render_csv(table: &ResultTable, decimals: Option<usize>) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        writer.write_record(row.iter().map(|c| cell_text(c, decimals))).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct JsonTable<'a> {
    columns: &'a [String],
    rows: &'a [Vec<Cell>],
}

/// `{"columns": [...], "rows": [[...]]}` at full precision.
pub fn render_json(table: &ResultTable) -> Vec<u8> {
    let mut bytes =
        serde_json::to_vec_pretty(&JsonTable { columns: &table.columns, rows: &table.rows }).expect("tables serialize");
    bytes.push(b'\n');
    bytes
}

pub fn render_table(table: &ResultTable, format: OutputFormat, decimals: Option<usize>) -> Vec<u8> {
    match format {
        OutputFormat::Csv => render_csv(table, decimals),
        OutputFormat::Json => render_json(table),
    }
}

/// Writes through a temporary file in the same directory, then renames, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_table(
    table: &ResultTable,
    format: OutputFormat,
    decimals: Option<usize>,
    path: &Path,
) -> std::io::Result<()> {
    write_atomic(path, &render_table(table, format, decimals))
}
