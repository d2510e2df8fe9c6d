use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use thiserror::Error;

use crate::Warning;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    MalformedLine(usize),
    #[error("cannot read configuration `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("`{key}`: invalid value `{value}` ({expected})")]
    InvalidValue { key: String, value: String, expected: &'static str },
}

/// Keys understood by the runner. Anything else draws a warning.
pub const KNOWN_KEYS: &[&str] = &[
    "source_tree",
    "output_dir",
    "plugins_dir",
    "cache_dir",
    "log.dir",
    "log.level",
    "log.console",
    "log.file",
    "archive",
    "archive.dir",
    "archive.include_inputs",
    "code.extractor",
    "code.extractor.file_regex",
    "code.extractor.variable_regex",
    "code.extractor.handle_macros",
    "code.extractor.fuzzy_parsing",
    "code.provider.timeout",
    "code.provider.cache.write",
    "code.provider.cache.read",
    "build.extractor",
    "build.extractor.csv_path",
    "build.provider.timeout",
    "build.provider.cache.write",
    "build.provider.cache.read",
    "variability.extractor",
    "variability.input_file",
    "variability.provider.timeout",
    "variability.provider.cache.write",
    "variability.provider.cache.read",
    "analysis",
    "analysis.pipeline",
    "analysis.output.format",
    "analysis.round_decimals",
    "analysis.relevant_features_only",
    "analysis.force_sequential",
    "analysis.report_intermediates",
    "analysis.pc_finder.conjoin_build",
    "analysis.metrics_runner.metrics_class",
];

/// Alternative spellings accepted for compatibility with existing
/// configuration files. They are stored under the canonical key.
const KEY_ALIASES: &[(&str, &str)] = &[
    ("code.extractor.class", "code.extractor"),
    ("build.extractor.class", "build.extractor"),
    ("variability.extractor.class", "variability.extractor"),
    ("analysis.class", "analysis"),
    ("analysis.output.type", "analysis.output.format"),
    ("analysis.consider_vm_vars_only", "analysis.relevant_features_only"),
];

/// Keys holding filesystem paths; relative values resolve against the
/// configuration file's directory.
pub const PATH_KEYS: &[&str] = &[
    "source_tree",
    "output_dir",
    "plugins_dir",
    "cache_dir",
    "log.dir",
    "archive.dir",
    "build.extractor.csv_path",
    "variability.input_file",
];

pub fn canonical_key(key: &str) -> &str {
    KEY_ALIASES.iter().find(|(alias, _)| *alias == key).map_or(key, |(_, canonical)| canonical)
}

/// An ordered `key -> value` map read from a properties file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    entries: IndexMap<String, String>,
    base_dir: Option<PathBuf>,
}

/// Parses `key = value` lines. `#` starts a comment line; later duplicates
/// win with a warning; unknown keys are kept and warned about.
pub fn parse_properties(text: &str) -> Result<(ExperimentConfig, Vec<Warning>), ConfigError> {
    let mut config = ExperimentConfig::default();
    let mut warnings = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::MalformedLine(line_no));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::MalformedLine(line_no));
        }
        let canonical = canonical_key(key).to_string();
        if !KNOWN_KEYS.contains(&canonical.as_str()) {
            warnings.push(Warning::new(format!("config:{line_no}"), format!("unknown key `{key}`")));
        }
        if config.entries.contains_key(&canonical) {
            warnings.push(Warning::new(
                format!("config:{line_no}"),
                format!("duplicate key `{canonical}` overrides an earlier value"),
            ));
            config.entries.shift_remove(&canonical);
        }
        config.entries.insert(canonical, value.trim().to_string());
    }
    Ok((config, warnings))
}

/// Reads and parses a configuration file; relative paths resolve against
/// its directory.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, Vec<Warning>), ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let (mut config, warnings) = parse_properties(&text)?;
    config.base_dir =
        path.parent().map(|p| if p.as_os_str().is_empty() { PathBuf::from(".") } else { p.to_path_buf() });
    Ok((config, warnings))
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(canonical_key(key)).map(String::as_str)
    }

    /// Like [`get`](Self::get), but treats empty values as absent.
    pub fn get_nonempty(&self, key: &str) -> Option<&str> {
        self.get(key).filter(|v| !v.is_empty())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(canonical_key(key).to_string(), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.shift_remove(canonical_key(key))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(canonical_key(key))
    }

    pub fn entries(&self) -> &IndexMap<String, String> {
        &self.entries
    }

    pub fn base_dir(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    pub fn set_base_dir(&mut self, dir: Option<PathBuf>) {
        self.base_dir = dir;
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get_nonempty(key) {
            None => Ok(default),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(ConfigError::InvalidValue { key: key.into(), value: v.into(), expected: "a boolean" }),
            },
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get_nonempty(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::InvalidValue {
                key: key.into(),
                value: v.into(),
                expected: "a non-negative integer",
            }),
        }
    }

    /// The value of a path key, resolved against the base directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = PathBuf::from(self.get_nonempty(key)?);
        Some(match &self.base_dir {
            Some(base) if raw.is_relative() => base.join(raw),
            _ => raw,
        })
    }

    /// Properties text with one `key = value` line per entry, in order.
    pub fn to_properties(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
