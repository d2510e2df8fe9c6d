use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ResultTable;
use crate::cpp::{CodeModel, LineKind, SourceFileBlocks};
use crate::formula::simplify;
use crate::models::VariabilityModel;
use crate::par;

/// Decides which variables count as variability variables.
#[derive(Debug, Clone, Copy)]
pub enum VariabilityFilter<'a> {
    /// Any variable.
    All,
    /// Variables matching the (full-match) regex.
    Pattern(&'a Regex),
    /// Variables declared by the model.
    Model(&'a VariabilityModel),
}

impl VariabilityFilter<'_> {
    pub fn accepts(&self, name: &str) -> bool {
        match self {
            VariabilityFilter::All => true,
            VariabilityFilter::Pattern(re) => re.is_match(name),
            VariabilityFilter::Model(vm) => vm.contains(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMetrics {
    pub path: String,
    /// Lines classified as code.
    pub dloc: usize,
    /// Code lines under a non-trivial condition on a variability variable.
    pub lof: usize,
}

impl FileMetrics {
    /// `100 * lof / dloc`, or 0 for a file without code lines.
    pub fn plof(&self) -> f64 {
        if self.dloc == 0 {
            0.0
        } else {
            100.0 * self.lof as f64 / self.dloc as f64
        }
    }
}

fn file_metrics(file: &SourceFileBlocks, filter: VariabilityFilter<'_>) -> FileMetrics {
    let pcs = file.line_presence_conditions();
    let mut dloc = 0;
    let mut lof = 0;
    for (kind, pc) in file.line_kinds.iter().zip(&pcs) {
        if *kind != LineKind::Code {
            continue;
        }
        dloc += 1;
        let pc = simplify(pc);
        if !pc.is_true() && pc.variables().iter().any(|v| filter.accepts(v)) {
            lof += 1;
        }
    }
    FileMetrics { path: file.path.clone(), dloc, lof }
}

/// Per-file DLoC, LoF and PLoF, ordered by path.
pub fn metrics_per_file(code: &CodeModel, filter: VariabilityFilter<'_>) -> Vec<FileMetrics> {
    let mut out = par::map(&code.files, |f| file_metrics(f, filter));
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out
}

pub fn metrics_table(metrics: &[FileMetrics]) -> ResultTable {
    let mut table = ResultTable::new("MetricsPerFile", &["Source", "DLoC", "LoF", "PLoF"]);
    for m in metrics {
        table.push_row(vec![m.path.clone().into(), m.dloc.into(), m.lof.into(), m.plof().into()]);
    }
    table
}
