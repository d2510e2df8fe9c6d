//! Precomputed build models as CSV: `path,presence_condition`.

use std::path::Path;

use thiserror::Error;

use super::{normalize_path, BuildModel};
use crate::formula::{parse_formula, Formula};

const HEADER: [&str; 2] = ["path", "presence_condition"];

#[derive(Debug, Error)]
pub enum CsvModelError {
    #[error("line {0}: expected the header `path,presence_condition`")]
    MissingHeader(u64),
    #[error("line {0}: malformed row")]
    MalformedRow(u64),
    #[error("line {line}: invalid presence condition: {message}")]
    FormulaSyntaxError { line: u64, message: String },
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn load_build_model_csv(path: &Path) -> Result<BuildModel, CsvModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CsvModelError::Io { path: path.display().to_string(), source })?;
    parse_build_model_csv(&text, &path.display().to_string())
}

/// Parses CSV text. A path listed twice gets the disjunction of its rows.
pub fn parse_build_model_csv(text: &str, source_path: &str) -> Result<BuildModel, CsvModelError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut model = BuildModel::new(source_path);
    let mut seen_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| CsvModelError::MalformedRow(e.position().map_or(0, |p| p.line())))?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if !seen_header {
            if fields != HEADER {
                return Err(CsvModelError::MissingHeader(line));
            }
            seen_header = true;
            continue;
        }
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        let [path, pc] = fields.as_slice() else {
            return Err(CsvModelError::MalformedRow(line));
        };
        if path.is_empty() {
            return Err(CsvModelError::MalformedRow(line));
        }
        let pc = parse_formula(pc).map_err(|e| CsvModelError::FormulaSyntaxError { line, message: e.to_string() })?;
        let path = normalize_path(path);
        let merged = match model.entries.remove(&path) {
            Some(existing) => Formula::or2(existing, pc),
            None => pc,
        };
        model.entries.insert(path, merged);
    }
    if !seen_header {
        return Err(CsvModelError::MissingHeader(1));
    }
    Ok(model)
}

pub fn build_model_to_csv(model: &BuildModel) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for (path, pc) in &model.entries {
        writer.write_record([path.as_str(), pc.to_string().as_str()]).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
