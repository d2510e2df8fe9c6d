use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{extract_blocks, ExtractError, SourceFileBlocks};
use crate::{par, Warning};

pub const DEFAULT_FILE_REGEX: &str = r".*\.c";
pub const DEFAULT_VARIABLE_REGEX: &str = r"CONFIG_\w+";

/// Settings of the code-block extractor. Both patterns must match the whole
/// string (file paths are matched relative to the source tree).
#[derive(Debug, Clone)]
pub struct CodeExtractorSettings {
    file_pattern: String,
    file_regex: Regex,
    variable_pattern: String,
    variable_regex: Regex,
    pub handle_macros: bool,
}

pub(crate) fn full_match_regex(pattern: &str) -> Result<Regex, ExtractError> {
    Regex::new(&format!("^(?:{pattern})$"))
        .map_err(|source| ExtractError::InvalidRegex { pattern: pattern.to_string(), source })
}

impl CodeExtractorSettings {
    pub fn new(file_pattern: &str, variable_pattern: &str, handle_macros: bool) -> Result<Self, ExtractError> {
        Ok(CodeExtractorSettings {
            file_pattern: file_pattern.to_string(),
            file_regex: full_match_regex(file_pattern)?,
            variable_pattern: variable_pattern.to_string(),
            variable_regex: full_match_regex(variable_pattern)?,
            handle_macros,
        })
    }

    pub fn file_pattern(&self) -> &str {
        &self.file_pattern
    }

    pub fn variable_pattern(&self) -> &str {
        &self.variable_pattern
    }

    pub fn matches_file(&self, relative_path: &str) -> bool {
        self.file_regex.is_match(relative_path)
    }

    pub fn is_variability_variable(&self, name: &str) -> bool {
        self.variable_regex.is_match(name)
    }

    pub fn variable_regex(&self) -> &Regex {
        &self.variable_regex
    }
}

impl Default for CodeExtractorSettings {
    fn default() -> Self {
        CodeExtractorSettings::new(DEFAULT_FILE_REGEX, DEFAULT_VARIABLE_REGEX, false)
            .expect("default patterns are valid")
    }
}

/// The code pipeline's output: per-file block trees in path order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeModel {
    pub files: Vec<SourceFileBlocks>,
    pub warnings: Vec<Warning>,
}

impl CodeModel {
    pub fn file(&self, path: &str) -> Option<&SourceFileBlocks> {
        self.files.binary_search_by(|f| f.path.as_str().cmp(path)).ok().map(|i| &self.files[i])
    }
}

/// Files below `root` whose relative path matches the file pattern, sorted.
pub fn matching_files(root: &Path, settings: &CodeExtractorSettings) -> Result<Vec<(String, PathBuf)>, ExtractError> {
    if !root.is_dir() {
        return Err(ExtractError::SourceTreeMissing(root.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| ExtractError::Io {
            path: e.path().map_or_else(|| root.display().to_string(), |p| p.display().to_string()),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let relative = relative_slash_path(root, entry.path());
        if settings.matches_file(&relative) {
            files.push((relative, entry.into_path()));
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn relative_slash_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

pub fn scan_source_tree(root: &Path, settings: &CodeExtractorSettings) -> Result<CodeModel, ExtractError> {
    scan_source_tree_cancellable(root, settings, &AtomicBool::new(false))
}

/// Like [`scan_source_tree`], but stops with [`ExtractError::Cancelled`]
/// once `cancel` is set. Per-file failures become warnings.
pub fn scan_source_tree_cancellable(
    root: &Path,
    settings: &CodeExtractorSettings,
    cancel: &AtomicBool,
) -> Result<CodeModel, ExtractError> {
    let files = matching_files(root, settings)?;
    let results = par::map(&files, |(relative, full)| {
        if cancel.load(Ordering::Relaxed) {
            return Err(ExtractError::Cancelled);
        }
        let outcome = std::fs::read(full)
            .map_err(|source| ExtractError::Io { path: relative.clone(), source })
            .and_then(|bytes| extract_blocks(&String::from_utf8_lossy(&bytes), relative, settings.handle_macros));
        Ok(outcome)
    });

    let mut model = CodeModel::default();
    for result in results {
        match result? {
            Ok(extraction) => {
                model.files.push(extraction.blocks);
                model.warnings.extend(extraction.warnings);
            }
            Err(err) => {
                let origin = match &err {
                    ExtractError::UnbalancedDirectives { path, line } => format!("{path}:{line}"),
                    ExtractError::Io { path, .. } => path.clone(),
                    _ => root.display().to_string(),
                };
                model.warnings.push(Warning::new(origin, format!("file skipped: {err}")));
            }
        }
    }
    Ok(model)
}
