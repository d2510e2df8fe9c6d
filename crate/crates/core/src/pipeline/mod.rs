//! Experiment infrastructure: configuration, the component registry and
//! wiring language, the runner with per-pipeline timeouts, model caching,
//! result writing, logging and archiving for reproduction.
//!
//! A run proceeds as follows. [`validate_config`] turns an
//! [`ExperimentConfig`] into a [`Plan`], rejecting missing inputs and
//! unsatisfied component dependencies before anything is extracted. The
//! configured extractors then run concurrently, each on its own thread with
//! its own timeout. The pipeline tree is evaluated bottom-up with sibling
//! nodes in parallel. Tables are written through temporary files, followed
//! by the [`RunManifest`] and, when enabled, a zip archive.

mod archive;
mod cache;
mod config;
mod dsl;
mod log;
mod manifest;
mod runner;
mod writer;

use thiserror::Error;

pub use archive::{create_archive, rerun_archive, RerunOutcome};
pub use cache::{cache_path, cache_read, cache_write, CacheError, ModelKind};
pub use config::{canonical_key, load_config, parse_properties, ConfigError, ExperimentConfig, KNOWN_KEYS, PATH_KEYS};
pub use dsl::{
    parse_pipeline_dsl, short_name, ComponentSpec, DataKind, DslError, ExtractorPipeline, ExtractorSpec, PipelineNode,
    Registry, CONFIGURED_PIPELINE,
};
pub use log::{LogLevel, Logger};
pub use manifest::{hash_file, sha256_hex, InputRecord, OutputRecord, RunManifest, HASH_ALGORITHM};
pub use runner::{run_experiment, run_plan, validate_config, Plan, RunOutcome};
pub use writer::{render_csv, render_json, render_table, round_half_up, write_atomic, write_table, OutputFormat};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),
    #[error("{pipeline} extraction exceeded its timeout of {millis} ms")]
    ExtractorTimeout { pipeline: String, millis: u64 },
    #[error("{pipeline} extraction failed: {message}")]
    ExtractionFailed { pipeline: String, message: String },
    #[error("analysis `{name}` failed: {cause}")]
    AnalysisFailed { name: String, cause: String },
    #[error("I/O error on `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("archive is missing {}", .0.join(", "))]
    ArchiveIncomplete(Vec<String>),
    #[error("invalid archive `{path}`: {message}")]
    ArchiveInvalid { path: String, message: String },
    #[error("reproduction mismatch for `{file}`: expected {expected}, got {got}")]
    ReproductionMismatch { file: String, expected: String, got: String },
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::ConfigInvalid(vec![e.to_string()])
    }
}
