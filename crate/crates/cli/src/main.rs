//! `splwb`: runs, validates and reproduces variability-analysis experiments.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime or
//! analysis error, 3 reproduction mismatch. Only result-file paths are
//! printed to standard output; progress goes to standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splwb_core::pipeline::{
    load_config, rerun_archive, run_experiment, validate_config, ExperimentConfig, LogLevel, PipelineError, Registry,
};

#[derive(Parser)]
#[command(name = "splwb", version, about = "Configuration-driven variability analysis of C product lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a properties file.
    Run(ConfigArgs),
    /// Check a properties file without extracting anything.
    Validate(ConfigArgs),
    /// Re-execute an archived experiment and compare its outputs.
    Rerun {
        archive: PathBuf,
        /// Directory for the extracted archive and the new outputs.
        #[arg(long, alias = "output-dir")]
        workspace: Option<PathBuf>,
    },
    /// List the built-in extractors and pipeline components.
    Components,
}

#[derive(Args)]
struct ConfigArgs {
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Runs every stage on one thread, one after another.
    #[arg(long)]
    force_sequential: bool,
    /// Overrides `log.level` (debug, info, warning, error).
    #[arg(long, value_parser = parse_level)]
    log_level: Option<String>,
    /// Disables archiving regardless of the configuration.
    #[arg(long)]
    no_archive: bool,
}

fn parse_level(text: &str) -> Result<String, String> {
    LogLevel::parse(text).map(|_| text.to_ascii_lowercase()).ok_or_else(|| format!("unknown log level `{text}`"))
}

const SUBCOMMANDS: &[&str] = &["run", "validate", "rerun", "components", "help"];

/// Treats `splwb <config>` as `splwb run <config>`.
fn normalize_args(mut args: Vec<String>) -> Vec<String> {
    if let Some(first) = args.get(1) {
        if !first.starts_with('-') && !SUBCOMMANDS.contains(&first.as_str()) {
            args.insert(1, "run".into());
        }
    }
    args
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().map(|cwd| cwd.join(path)).unwrap_or_else(|_| path.to_path_buf())
    }
}

fn prepare(args: &ConfigArgs) -> Result<ExperimentConfig, PipelineError> {
    let (mut config, warnings) = load_config(&args.config)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = &args.output_dir {
        config.set("output_dir", absolute(dir).display().to_string());
    }
    if args.force_sequential {
        config.set("analysis.force_sequential", "true");
    }
    if let Some(level) = &args.log_level {
        config.set("log.level", level.clone());
    }
    if args.no_archive {
        config.set("archive", "false");
    }
    if !config.contains("log.console") {
        config.set("log.console", "true");
    }
    Ok(config)
}

fn exit_code(err: &PipelineError) -> u8 {
    match err {
        PipelineError::ConfigInvalid(_) => 1,
        PipelineError::ReproductionMismatch { .. } => 3,
        _ => 2,
    }
}

fn report(err: &PipelineError) {
    match err {
        PipelineError::ConfigInvalid(problems) => {
            eprintln!("error: invalid configuration");
            for p in problems {
                eprintln!("  - {p}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Run(args) => {
            let outcome = run_experiment(&prepare(&args)?)?;
            print_paths(&outcome.result_files);
        }
        Command::Validate(args) => {
            let plan = validate_config(&prepare(&args)?)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("configuration is valid: {}", plan.pipeline);
        }
        Command::Rerun { archive, workspace } => {
            let workspace = match workspace {
                Some(dir) => absolute(&dir),
                None => tempfile::Builder::new()
                    .prefix("splwb-rerun-")
                    .tempdir()
                    .map_err(|source| PipelineError::Io { path: "temporary workspace".into(), source })?
                    .keep(),
            };
            let outcome = rerun_archive(&archive, &workspace)?;
            eprintln!("ReproductionMatch: {} output(s) identical", outcome.compared.len());
            print_paths(&outcome.rerun.result_files);
        }
        Command::Components => {
            let registry = Registry::builtin();
            for e in registry.extractors() {
                println!("{:<24} extractor ({}.extractor)", e.name, e.pipeline.key_prefix());
            }
            for c in registry.components() {
                let inputs: Vec<String> = c.inputs.iter().map(ToString::to_string).collect();
                println!("{:<24} arity {:<5} ({}) -> {}", c.name, c.arity_text(), inputs.join(", "), c.output);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args().collect())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
