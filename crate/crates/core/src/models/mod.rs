//! Variability-model and build-model extractors.

mod build_csv;
mod dimacs;
mod kbuild;
mod path;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;

pub use build_csv::{build_model_to_csv, load_build_model_csv, parse_build_model_csv, CsvModelError};
pub use dimacs::{constraint_clauses, parse_dimacs, write_dimacs, DimacsError};
pub use kbuild::{parse_kbuild_tree, KbuildError, DEFAULT_MAKEFILE_NAMES};
pub use path::normalize_path;

/// Features of the product line plus the constraint over them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariabilityModel {
    /// `(name, dimacs id)` in id order.
    pub variables: Vec<(String, u32)>,
    pub constraint: Formula,
    pub source_path: String,
}

impl VariabilityModel {
    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.variables.iter().any(|(n, _)| n == name)
    }
}

/// Presence conditions of source files as seen by the build system.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildModel {
    /// Normalized, `/`-separated paths relative to the source tree.
    pub entries: BTreeMap<String, Formula>,
    pub source_path: String,
}

impl BuildModel {
    pub fn new(source_path: impl Into<String>) -> Self {
        BuildModel { entries: BTreeMap::new(), source_path: source_path.into() }
    }

    pub fn presence_condition(&self, path: &str) -> Option<&Formula> {
        self.entries.get(path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
