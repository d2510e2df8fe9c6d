use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::Utc;
use walkdir::WalkDir;

use super::cache::{cache_read, cache_write, ModelKind};
use super::config::{ExperimentConfig, KNOWN_KEYS, PATH_KEYS};
use super::dsl::{parse_pipeline_dsl, ExtractorPipeline, PipelineNode, Registry, CONFIGURED_PIPELINE};
use super::log::{LogLevel, Logger};
use super::manifest::{hash_file, sha256_hex, InputHasher, InputRecord, OutputRecord, RunManifest, HASH_ALGORITHM};
use super::writer::{render_table, write_atomic, OutputFormat};
use super::{archive, PipelineError};
use crate::analysis::{self, FeatureEffectEntry, PcMap, ResultTable, VariabilityFilter};
use crate::cpp::{matching_files, scan_source_tree_cancellable, CodeExtractorSettings, CodeModel, ExtractError};
use crate::cpp::{DEFAULT_FILE_REGEX, DEFAULT_VARIABLE_REGEX};
use crate::models::{
    load_build_model_csv, parse_dimacs, parse_kbuild_tree, BuildModel, VariabilityModel, DEFAULT_MAKEFILE_NAMES,
};
use crate::{par, Warning, TOOL_VERSION};

#[derive(Debug, Clone)]
pub struct ProviderSettings {
    /// `None` means no limit.
    pub timeout: Option<Duration>,
    pub cache_read: bool,
    pub cache_write: bool,
}

#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub root: PathBuf,
    pub settings: CodeExtractorSettings,
    pub provider: ProviderSettings,
}

#[derive(Debug, Clone)]
pub enum BuildSource {
    Kbuild(PathBuf),
    Csv(PathBuf),
}

#[derive(Debug, Clone)]
pub struct BuildSpec {
    pub source: BuildSource,
    pub provider: ProviderSettings,
}

#[derive(Debug, Clone)]
pub struct VmSpec {
    pub path: PathBuf,
    pub provider: ProviderSettings,
}

#[derive(Debug, Clone)]
pub struct ArchiveSettings {
    pub dir: PathBuf,
    pub include_inputs: bool,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub pipeline: PipelineNode,
    pub code: Option<CodeSpec>,
    pub build: Option<BuildSpec>,
    pub vm: Option<VmSpec>,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    /// `None` writes floats at full precision.
    pub decimals: Option<usize>,
    pub relevant_only: bool,
    pub force_sequential: bool,
    pub report_intermediates: bool,
    pub conjoin_build: bool,
    pub cache_dir: Option<PathBuf>,
    pub log_level: LogLevel,
    pub log_console: bool,
    pub log_dir: Option<PathBuf>,
    pub archive: Option<ArchiveSettings>,
    /// The configuration with path keys resolved.
    pub effective_config: ExperimentConfig,
    pub warnings: Vec<Warning>,
}

/// Checks the configuration and resolves it into a [`Plan`] without touching
/// any input beyond existence checks.
pub fn validate_config(config: &ExperimentConfig) -> Result<Plan, PipelineError> {
    let registry = Registry::builtin();
    let mut problems: Vec<String> = Vec::new();
    let mut warnings: Vec<Warning> = Vec::new();

    for key in config.entries().keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            warnings.push(Warning::new("config", format!("unknown key `{key}`")));
        }
    }
    if config.contains("plugins_dir") {
        warnings.push(Warning::new("config", "`plugins_dir` is accepted but ignored; components are built in"));
    }
    if config.contains("analysis.metrics_runner.metrics_class") {
        warnings.push(Warning::new(
            "config",
            "`analysis.metrics_runner.metrics_class` is ignored; MetricsPerFile reports DLoC, LoF and PLoF",
        ));
    }

    let flag = |key: &str, default: bool, problems: &mut Vec<String>| match config.bool_or(key, default) {
        Ok(v) => v,
        Err(e) => {
            problems.push(e.to_string());
            default
        }
    };
    if !flag("code.extractor.fuzzy_parsing", true, &mut problems) {
        warnings.push(Warning::new("config", "unparsable conditions are always treated as true"));
    }

    let provider = |prefix: &str, problems: &mut Vec<String>| {
        let timeout = match config.u64_or(&format!("{prefix}.provider.timeout"), 0) {
            Ok(0) => None,
            Ok(ms) => Some(Duration::from_millis(ms)),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        };
        let mut read_write = [false; 2];
        for (slot, suffix) in read_write.iter_mut().zip(["read", "write"]) {
            match config.bool_or(&format!("{prefix}.provider.cache.{suffix}"), false) {
                Ok(v) => *slot = v,
                Err(e) => problems.push(e.to_string()),
            }
        }
        ProviderSettings { timeout, cache_read: read_write[0], cache_write: read_write[1] }
    };

    let output_dir = config.path("output_dir");
    if output_dir.is_none() {
        problems.push("`output_dir` is required".into());
    }

    let extractor_for = |pipeline: ExtractorPipeline, problems: &mut Vec<String>| {
        let key = format!("{}.extractor", pipeline.key_prefix());
        let name = config.get_nonempty(&key)?;
        match registry.extractor(name) {
            Some(spec) if spec.pipeline == pipeline => Some(spec.name),
            Some(spec) => {
                problems.push(format!("`{key}`: `{}` is not a {} extractor", spec.name, pipeline.key_prefix()));
                None
            }
            None => {
                problems.push(format!("`{key}`: unknown extractor `{name}`"));
                None
            }
        }
    };

    let source_tree = || -> Result<PathBuf, String> {
        let root = config
            .path("source_tree")
            .ok_or_else(|| "`source_tree` is required by the code and Kbuild extractors".to_string())?;
        if root.is_dir() {
            Ok(root)
        } else {
            Err(format!("source tree `{}` does not exist", root.display()))
        }
    };
    let existing_file = |key: &str| -> Result<PathBuf, String> {
        let path = config.path(key).ok_or_else(|| format!("`{key}` is required"))?;
        if path.is_file() {
            Ok(path)
        } else {
            Err(format!("`{key}`: file `{}` does not exist", path.display()))
        }
    };

    let mut code = None;
    if extractor_for(ExtractorPipeline::Code, &mut problems).is_some() {
        let file_re = config.get_nonempty("code.extractor.file_regex").unwrap_or(DEFAULT_FILE_REGEX);
        let var_re = config.get_nonempty("code.extractor.variable_regex").unwrap_or(DEFAULT_VARIABLE_REGEX);
        let macros = flag("code.extractor.handle_macros", false, &mut problems);
        let provider = provider("code", &mut problems);
        match (source_tree(), CodeExtractorSettings::new(file_re, var_re, macros)) {
            (Ok(root), Ok(settings)) => code = Some(CodeSpec { root, settings, provider }),
            (root, settings) => {
                problems.extend(root.err());
                problems.extend(settings.err().map(|e| e.to_string()));
            }
        }
    }

    let mut build = None;
    if let Some(name) = extractor_for(ExtractorPipeline::Build, &mut problems) {
        let provider = provider("build", &mut problems);
        let source = if name == "CsvBuildModel" {
            existing_file("build.extractor.csv_path").map(BuildSource::Csv)
        } else {
            source_tree().map(BuildSource::Kbuild)
        };
        match source {
            Ok(source) => build = Some(BuildSpec { source, provider }),
            Err(p) => problems.push(p),
        }
    }

    let mut vm = None;
    if extractor_for(ExtractorPipeline::Variability, &mut problems).is_some() {
        let provider = provider("variability", &mut problems);
        match existing_file("variability.input_file") {
            Ok(path) => vm = Some(VmSpec { path, provider }),
            Err(p) => problems.push(p),
        }
    }

    let has_code = config.contains("code.extractor");
    let has_build = config.contains("build.extractor");
    let has_vm = config.contains("variability.extractor");
    let analysis =
        config.get_nonempty("analysis").or(config.get_nonempty("analysis.pipeline").map(|_| CONFIGURED_PIPELINE));
    let pipeline = match analysis {
        None => {
            problems.push("`analysis` is required".into());
            None
        }
        Some(name) if super::dsl::short_name(name) == CONFIGURED_PIPELINE => {
            match config.get_nonempty("analysis.pipeline") {
                None => {
                    problems.push("`analysis.pipeline` is required by ConfiguredPipelineAnalysis".into());
                    None
                }
                Some(text) => match parse_pipeline_dsl(text, &registry) {
                    Ok(node) => Some(node),
                    Err(e) => {
                        problems.push(format!("`analysis.pipeline`: {e}"));
                        None
                    }
                },
            }
        }
        Some(name) => match registry.default_pipeline(name, has_build, has_vm) {
            Some(node) => Some(node),
            None => {
                problems.push(format!("`analysis`: unknown analysis `{name}`"));
                None
            }
        },
    };

    if let Some(node) = &pipeline {
        let root = &node.component;
        for n in node.preorder() {
            let needed = match n.component.as_str() {
                "cmComponent" if !has_code => Some("code.extractor"),
                "bmComponent" if !has_build => Some("build.extractor"),
                "vmComponent" if !has_vm => Some("variability.extractor"),
                _ => None,
            };
            if let Some(key) = needed {
                problems.push(format!("`{root}` needs `{}()`, which requires `{key}` to be configured", n.component));
            }
        }
    }

    let format = match OutputFormat::parse(config.get_nonempty("analysis.output.format").unwrap_or("csv")) {
        Some(f) => f,
        None => {
            problems.push("`analysis.output.format` must be csv or json".into());
            OutputFormat::Csv
        }
    };
    let decimals = match config.u64_or("analysis.round_decimals", 2) {
        Ok(d) if d <= 17 => Some(d as usize),
        Ok(d) => {
            problems.push(format!("`analysis.round_decimals`: {d} exceeds 17"));
            None
        }
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    };
    let log_level = match LogLevel::parse(config.get_nonempty("log.level").unwrap_or("info")) {
        Some(l) => l,
        None => {
            problems.push("`log.level` must be debug, info, warning or error".into());
            LogLevel::Info
        }
    };
    let log_console = flag("log.console", false, &mut problems);
    let log_file = flag("log.file", config.contains("log.dir"), &mut problems);
    let relevant_only = flag("analysis.relevant_features_only", false, &mut problems);
    let force_sequential = flag("analysis.force_sequential", false, &mut problems);
    let report_intermediates = flag("analysis.report_intermediates", false, &mut problems);
    let conjoin_build = flag("analysis.pc_finder.conjoin_build", true, &mut problems);
    let archive_on = flag("archive", false, &mut problems);
    let include_inputs = flag("archive.include_inputs", false, &mut problems);

    let providers =
        [code.as_ref().map(|c| &c.provider), build.as_ref().map(|b| &b.provider), vm.as_ref().map(|v| &v.provider)];
    let any_cache = providers.iter().flatten().any(|p| p.cache_read || p.cache_write);
    let cache_dir = config.path("cache_dir");
    if any_cache && cache_dir.is_none() {
        problems.push("caching is enabled but `cache_dir` is not set".into());
    }

    if !problems.is_empty() {
        return Err(PipelineError::ConfigInvalid(problems));
    }
    let output_dir = output_dir.expect("checked above");
    let log_dir = log_file.then(|| config.path("log.dir").unwrap_or_else(|| output_dir.clone()));
    let archive = archive_on.then(|| ArchiveSettings {
        dir: config.path("archive.dir").unwrap_or_else(|| output_dir.clone()),
        include_inputs,
    });

    let mut effective_config = config.clone();
    for key in PATH_KEYS {
        if let Some(path) = config.path(key) {
            effective_config.set(key, path.display().to_string());
        }
    }
    effective_config.set_base_dir(None);

    Ok(Plan {
        pipeline: pipeline.expect("checked above"),
        code,
        build,
        vm,
        output_dir,
        format,
        decimals,
        relevant_only,
        force_sequential,
        report_intermediates,
        conjoin_build,
        cache_dir,
        log_level,
        log_console,
        log_dir,
        archive,
        effective_config,
        warnings,
    })
}

/// Files produced by one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// Final result first, then intermediates in pipeline order.
    pub result_files: Vec<PathBuf>,
    pub log_path: Option<PathBuf>,
    pub archive_path: Option<PathBuf>,
}

/// Validates `config` and runs the experiment it describes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, PipelineError> {
    let plan = validate_config(config)?;
    run_plan(&plan)
}

enum Extracted {
    Code(CodeModel),
    Build(BuildModel),
    Vm(VariabilityModel),
}

struct Extraction {
    value: Extracted,
    warnings: Vec<Warning>,
    input: InputRecord,
    notes: Vec<String>,
}

type Job = Box<dyn FnOnce(&AtomicBool) -> Result<Extraction, PipelineError> + Send>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

fn extraction_failed(pipeline: &str) -> impl FnOnce(String) -> PipelineError + '_ {
    move |message| PipelineError::ExtractionFailed { pipeline: pipeline.to_string(), message }
}

/// Looks up the cache, otherwise runs `extract` and stores its result.
fn cached<T>(
    cache_dir: Option<&Path>,
    provider: &ProviderSettings,
    kind: ModelKind,
    key: &str,
    notes: &mut Vec<String>,
    extract: impl FnOnce() -> Result<T, PipelineError>,
) -> Result<T, PipelineError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    if let (Some(dir), true) = (cache_dir, provider.cache_read) {
        match cache_read::<T>(dir, kind, key) {
            Ok(Some(model)) => {
                notes.push(format!("cache hit {}", &key[..12]));
                return Ok(model);
            }
            Ok(None) => notes.push("cache miss".into()),
            Err(e) => notes.push(format!("WARNING {e}; extracting again")),
        }
    }
    let model = extract()?;
    if let (Some(dir), true) = (cache_dir, provider.cache_write) {
        if let Err(e) = cache_write(dir, kind, key, &model) {
            notes.push(format!("WARNING cache write failed: {e}"));
        }
    }
    Ok(model)
}

fn code_job(spec: CodeSpec, cache_dir: Option<PathBuf>, configured_path: String) -> Job {
    Box::new(move |cancel| {
        let fail =
            |e: ExtractError| PipelineError::ExtractionFailed { pipeline: "code".into(), message: e.to_string() };
        let files = matching_files(&spec.root, &spec.settings).map_err(fail)?;
        let mut tree = InputHasher::new();
        for (relative, full) in &files {
            tree.part(relative.as_bytes()).part(hash_file(full).map_err(io_err(full))?.as_bytes());
        }
        let tree_hash = tree.finish();
        let mut key = InputHasher::new();
        key.part(TOOL_VERSION.as_bytes())
            .part(tree_hash.as_bytes())
            .part(spec.settings.file_pattern().as_bytes())
            .part(spec.settings.variable_pattern().as_bytes())
            .part(&[spec.settings.handle_macros as u8]);
        let mut notes = vec![format!("{} matching files", files.len())];
        let model: CodeModel =
            cached(cache_dir.as_deref(), &spec.provider, ModelKind::Code, &key.finish(), &mut notes, || {
                scan_source_tree_cancellable(&spec.root, &spec.settings, cancel).map_err(fail)
            })?;
        Ok(Extraction {
            warnings: model.warnings.clone(),
            value: Extracted::Code(model),
            input: InputRecord { path: configured_path, sha256: tree_hash },
            notes,
        })
    })
}

fn kbuild_tree_hash(root: &Path) -> Result<String, PipelineError> {
    let mut entries = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry =
            entry.map_err(|e| PipelineError::ExtractionFailed { pipeline: "build".into(), message: e.to_string() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let relative = entry.path().strip_prefix(root).unwrap_or(entry.path()).to_string_lossy().replace('\\', "/");
        let name = entry.file_name().to_string_lossy();
        let content = if DEFAULT_MAKEFILE_NAMES.contains(&name.as_ref()) {
            hash_file(entry.path()).map_err(io_err(entry.path()))?
        } else {
            String::new()
        };
        entries.push((relative, content));
    }
    entries.sort();
    let mut h = InputHasher::new();
    for (relative, content) in &entries {
        h.part(relative.as_bytes()).part(content.as_bytes());
    }
    Ok(h.finish())
}

fn build_job(spec: BuildSpec, cache_dir: Option<PathBuf>, configured_path: String) -> Job {
    Box::new(move |_cancel| {
        let (input_hash, tag) = match &spec.source {
            BuildSource::Kbuild(root) => (kbuild_tree_hash(root)?, "kbuild"),
            BuildSource::Csv(path) => (hash_file(path).map_err(io_err(path))?, "csv"),
        };
        let mut key = InputHasher::new();
        key.part(TOOL_VERSION.as_bytes()).part(tag.as_bytes()).part(input_hash.as_bytes());
        let mut notes = Vec::new();
        let (model, warnings): (BuildModel, Vec<Warning>) =
            cached(cache_dir.as_deref(), &spec.provider, ModelKind::Build, &key.finish(), &mut notes, || match &spec
                .source
            {
                BuildSource::Kbuild(root) => parse_kbuild_tree(root, &DEFAULT_MAKEFILE_NAMES)
                    .map_err(|e| extraction_failed("build")(e.to_string())),
                BuildSource::Csv(path) => load_build_model_csv(path)
                    .map(|m| (m, Vec::new()))
                    .map_err(|e| extraction_failed("build")(e.to_string())),
            })?;
        notes.push(format!("{} files with build conditions", model.len()));
        Ok(Extraction {
            value: Extracted::Build(model),
            warnings,
            input: InputRecord { path: configured_path, sha256: input_hash },
            notes,
        })
    })
}

fn vm_job(spec: VmSpec, cache_dir: Option<PathBuf>, configured_path: String) -> Job {
    Box::new(move |_cancel| {
        let bytes = std::fs::read(&spec.path).map_err(io_err(&spec.path))?;
        let input_hash = sha256_hex(&bytes);
        let mut key = InputHasher::new();
        key.part(TOOL_VERSION.as_bytes()).part(b"dimacs").part(input_hash.as_bytes());
        let mut notes = Vec::new();
        let (model, warnings): (VariabilityModel, Vec<Warning>) =
            cached(cache_dir.as_deref(), &spec.provider, ModelKind::Vm, &key.finish(), &mut notes, || {
                parse_dimacs(&String::from_utf8_lossy(&bytes), &configured_path)
                    .map_err(|e| extraction_failed("variability")(e.to_string()))
            })?;
        notes.push(format!("{} variables", model.variables.len()));
        Ok(Extraction {
            value: Extracted::Vm(model),
            warnings,
            input: InputRecord { path: configured_path, sha256: input_hash },
            notes,
        })
    })
}

struct Running {
    name: &'static str,
    timeout: Option<Duration>,
    started: Instant,
    cancel: Arc<AtomicBool>,
    rx: mpsc::Receiver<Result<Extraction, PipelineError>>,
}

fn spawn(name: &'static str, timeout: Option<Duration>, sequential: bool, job: Job) -> Running {
    let cancel = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let flag = Arc::clone(&cancel);
    std::thread::spawn(move || {
        let run = move || catch_unwind(AssertUnwindSafe(|| job(&flag)));
        let result = if sequential { par::run_sequential(run) } else { run() };
        let result = result.unwrap_or_else(|panic| {
            Err(PipelineError::ExtractionFailed { pipeline: name.into(), message: panic_message(&panic) })
        });
        let _ = tx.send(result);
    });
    Running { name, timeout, started: Instant::now(), cancel, rx }
}

fn await_extraction(running: &Running) -> Result<Extraction, PipelineError> {
    let received = match running.timeout {
        None => running.rx.recv().map_err(|_| mpsc::RecvTimeoutError::Disconnected),
        Some(limit) => running.rx.recv_timeout(limit.saturating_sub(running.started.elapsed())),
    };
    match received {
        Ok(result) => result,
        Err(mpsc::RecvTimeoutError::Timeout) => {
            running.cancel.store(true, Ordering::Relaxed);
            Err(PipelineError::ExtractorTimeout {
                pipeline: running.name.into(),
                millis: running.timeout.map_or(0, |t| t.as_millis() as u64),
            })
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(PipelineError::ExtractionFailed {
            pipeline: running.name.into(),
            message: "extraction thread ended without a result".into(),
        }),
    }
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

#[derive(Default)]
struct Models {
    code: Option<CodeModel>,
    build: Option<BuildModel>,
    vm: Option<VariabilityModel>,
}

#[derive(Clone)]
enum Value {
    Code,
    Build,
    Vm,
    Pcs(Arc<PcMap>),
    Effects(Arc<Vec<FeatureEffectEntry>>),
    Table(Arc<ResultTable>),
}

struct Evaluator<'a> {
    plan: &'a Plan,
    models: &'a Models,
    logger: &'a Logger,
    timings: Mutex<BTreeMap<String, f64>>,
    warnings: Mutex<Vec<(usize, Warning)>>,
    tables: Mutex<Vec<(usize, String, ResultTable)>>,
}

fn missing_model(name: &str) -> PipelineError {
    PipelineError::AnalysisFailed { name: name.into(), cause: "required model was not extracted".into() }
}

impl Evaluator<'_> {
    fn code(&self) -> Result<&CodeModel, PipelineError> {
        self.models.code.as_ref().ok_or_else(|| missing_model("cmComponent"))
    }

    fn build(&self) -> Result<&BuildModel, PipelineError> {
        self.models.build.as_ref().ok_or_else(|| missing_model("bmComponent"))
    }

    fn vm(&self) -> Result<&VariabilityModel, PipelineError> {
        self.models.vm.as_ref().ok_or_else(|| missing_model("vmComponent"))
    }

    fn variable_regex(&self) -> Result<&regex::Regex, PipelineError> {
        self.plan.code.as_ref().map(|c| c.settings.variable_regex()).ok_or_else(|| missing_model("cmComponent"))
    }

    fn eval_all(&self, jobs: &[(&PipelineNode, usize)]) -> Result<Vec<Value>, PipelineError> {
        match jobs {
            [] => Ok(Vec::new()),
            [(node, idx)] => Ok(vec![self.eval(node, *idx)?]),
            _ => {
                let (left, right) = jobs.split_at(jobs.len() / 2);
                let (a, b) = par::join(|| self.eval_all(left), || self.eval_all(right));
                let mut a = a?;
                a.extend(b?);
                Ok(a)
            }
        }
    }

    /// Evaluates `node`, whose pre-order index is `idx`.
    fn eval(&self, node: &PipelineNode, idx: usize) -> Result<Value, PipelineError> {
        let mut jobs = Vec::new();
        let mut next = idx + 1;
        for arg in &node.args {
            jobs.push((arg, next));
            next += arg.preorder().len();
        }
        let args = self.eval_all(&jobs)?;
        let started = Instant::now();
        let value = catch_unwind(AssertUnwindSafe(|| self.apply(node, idx, &args))).map_err(|panic| {
            PipelineError::AnalysisFailed { name: node.component.clone(), cause: panic_message(&panic) }
        })??;
        if !node.is_terminal() {
            let millis = started.elapsed().as_secs_f64() * 1000.0;
            self.logger.info("analysis", &format!("{} finished in {millis:.1} ms", node.component));
            self.timings.lock().expect("timings lock").insert(format!("analysis.{idx}.{}", node.component), millis);
            if self.plan.report_intermediates && idx != 0 {
                let table = self.to_table(&value)?;
                self.tables.lock().expect("tables lock").push((idx, node.component.clone(), table));
            }
        }
        Ok(value)
    }

    fn apply(&self, node: &PipelineNode, idx: usize, args: &[Value]) -> Result<Value, PipelineError> {
        let warn =
            |ws: Vec<Warning>| self.warnings.lock().expect("warnings lock").extend(ws.into_iter().map(|w| (idx, w)));
        Ok(match node.component.as_str() {
            "cmComponent" => {
                self.code()?;
                Value::Code
            }
            "bmComponent" => {
                self.build()?;
                Value::Build
            }
            "vmComponent" => {
                self.vm()?;
                Value::Vm
            }
            "UnDeadAnalysis" => {
                let (findings, ws) = analysis::undead_analysis(self.code()?, self.build()?, self.vm()?);
                warn(ws);
                Value::Table(Arc::new(analysis::dead_blocks_table(&findings)))
            }
            "MissingFeatures" => {
                let found =
                    analysis::missing_features(self.code()?, Some(self.build()?), self.vm()?, self.variable_regex()?);
                Value::Table(Arc::new(analysis::missing_features_table(&found)))
            }
            "PcFinder" => {
                let build = if args.len() > 1 { Some(self.build()?) } else { None };
                Value::Pcs(Arc::new(analysis::pc_finder(self.code()?, build, self.plan.conjoin_build)))
            }
            "FeatureEffectFinder" => {
                let Value::Pcs(pcs) = &args[0] else { return Err(missing_model("PcFinder")) };
                let entries = analysis::feature_effect(pcs);
                let vm = if self.plan.relevant_only { self.models.vm.as_ref() } else { None };
                Value::Effects(Arc::new(analysis::filter_relevant(entries, vm)))
            }
            "ConfigurationMismatches" => {
                let Value::Effects(fes) = &args[0] else { return Err(missing_model("FeatureEffectFinder")) };
                let found = analysis::configuration_mismatches(fes, self.vm()?);
                Value::Table(Arc::new(analysis::mismatches_table(&found)))
            }
            "MetricsPerFile" => {
                let filter = if args.len() > 1 {
                    VariabilityFilter::Model(self.vm()?)
                } else {
                    VariabilityFilter::Pattern(self.variable_regex()?)
                };
                let metrics = analysis::metrics_per_file(self.code()?, filter);
                Value::Table(Arc::new(analysis::metrics_table(&metrics)))
            }
            other => {
                return Err(PipelineError::AnalysisFailed {
                    name: other.into(),
                    cause: "not a registered component".into(),
                })
            }
        })
    }

    fn to_table(&self, value: &Value) -> Result<ResultTable, PipelineError> {
        Ok(match value {
            Value::Code => {
                let mut t = ResultTable::new("cmComponent", &["Source", "Start", "End", "PresenceCondition"]);
                for file in &self.code()?.files {
                    for block in file.blocks() {
                        t.push_row(vec![
                            file.path.clone().into(),
                            block.start_line.into(),
                            block.end_line.into(),
                            block.presence_condition.to_string().into(),
                        ]);
                    }
                }
                t
            }
            Value::Build => {
                let mut t = ResultTable::new("bmComponent", &["Source", "PresenceCondition"]);
                for (path, pc) in &self.build()?.entries {
                    t.push_row(vec![path.clone().into(), pc.to_string().into()]);
                }
                t
            }
            Value::Vm => {
                let vm = self.vm()?;
                let mut t = ResultTable::new("vmComponent", &["Variable", "Id"]);
                for (name, id) in &vm.variables {
                    t.push_row(vec![name.clone().into(), (*id as usize).into()]);
                }
                t
            }
            Value::Pcs(pcs) => analysis::pc_table(pcs),
            Value::Effects(fes) => analysis::effects_table(fes),
            Value::Table(t) => (**t).clone(),
        })
    }
}

/// A run identifier `yyyyMMdd-HHmmss`, suffixed when the output directory
/// already holds a run with that stamp.
fn run_id(output_dir: &Path, stem: &str) -> String {
    let stamp = Utc::now().format("%Y%m%d-%H%M%S").to_string();
    let taken = |id: &str| output_dir.join(format!("{stem}_{id}.manifest.json")).exists();
    if !taken(&stamp) {
        return stamp;
    }
    (1..).map(|n| format!("{stamp}-{n}")).find(|id| !taken(id)).expect("unbounded search")
}

/// Runs a validated plan: extraction, analysis, writing, manifest, archive.
pub fn run_plan(plan: &Plan) -> Result<RunOutcome, PipelineError> {
    std::fs::create_dir_all(&plan.output_dir).map_err(io_err(&plan.output_dir))?;
    let stem = plan.pipeline.component.clone();
    let id = run_id(&plan.output_dir, &stem);
    let log_path = plan.log_dir.as_ref().map(|d| d.join(format!("{stem}_{id}.log")));
    let logger = Logger::new(plan.log_level, plan.log_console, log_path.as_deref())
        .map_err(io_err(log_path.as_deref().unwrap_or(Path::new("log"))))?;
    let result = run_logged(plan, &stem, &id, &logger);
    if let Err(e) = &result {
        logger.error("run", &e.to_string());
    }
    logger.flush();
    result.map(|mut outcome| {
        outcome.log_path = log_path;
        outcome
    })
}

fn run_logged(plan: &Plan, stem: &str, id: &str, logger: &Logger) -> Result<RunOutcome, PipelineError> {
    let run_started = Instant::now();
    logger.info("run", &format!("{TOOL_VERSION}: {} -> {}", plan.pipeline, plan.output_dir.display()));
    for w in &plan.warnings {
        logger.warning("config", &w.to_string());
    }

    let config_value = |key: &str| plan.effective_config.get(key).unwrap_or_default().to_string();
    let mut jobs: Vec<(&'static str, Option<Duration>, Job)> = Vec::new();
    if let Some(spec) = &plan.code {
        jobs.push((
            "code",
            spec.provider.timeout,
            code_job(spec.clone(), plan.cache_dir.clone(), config_value("source_tree")),
        ));
    }
    if let Some(spec) = &plan.build {
        let configured = match &spec.source {
            BuildSource::Kbuild(_) => config_value("source_tree"),
            BuildSource::Csv(_) => config_value("build.extractor.csv_path"),
        };
        jobs.push(("build", spec.provider.timeout, build_job(spec.clone(), plan.cache_dir.clone(), configured)));
    }
    if let Some(spec) = &plan.vm {
        jobs.push((
            "variability",
            spec.provider.timeout,
            vm_job(spec.clone(), plan.cache_dir.clone(), config_value("variability.input_file")),
        ));
    }

    let mut extractions = Vec::new();
    if plan.force_sequential {
        for (name, timeout, job) in jobs {
            let running = spawn(name, timeout, true, job);
            extractions.push((name, running.started, await_extraction(&running)));
        }
    } else {
        let running: Vec<Running> =
            jobs.into_iter().map(|(name, timeout, job)| spawn(name, timeout, false, job)).collect();
        for r in &running {
            let outcome = await_extraction(r);
            if outcome.is_err() {
                running.iter().for_each(|r| r.cancel.store(true, Ordering::Relaxed));
            }
            extractions.push((r.name, r.started, outcome));
        }
    }

    let mut models = Models::default();
    let mut inputs = BTreeMap::new();
    let mut timings = BTreeMap::new();
    let mut warnings: Vec<Warning> = plan.warnings.clone();
    for (name, started, outcome) in extractions {
        let extraction = outcome?;
        let millis = started.elapsed().as_secs_f64() * 1000.0;
        timings.insert(format!("extract.{name}"), millis);
        for note in &extraction.notes {
            match note.strip_prefix("WARNING ") {
                Some(w) => logger.warning(name, w),
                None => logger.info(name, note),
            }
        }
        logger.info(
            name,
            &format!("extraction finished in {millis:.1} ms with {} warning(s)", extraction.warnings.len()),
        );
        for w in &extraction.warnings {
            logger.debug(name, &w.to_string());
        }
        warnings.extend(extraction.warnings);
        inputs.insert(name.to_string(), extraction.input);
        match extraction.value {
            Extracted::Code(m) => models.code = Some(m),
            Extracted::Build(m) => models.build = Some(m),
            Extracted::Vm(m) => models.vm = Some(m),
        }
    }

    let evaluator = Evaluator {
        plan,
        models: &models,
        logger,
        timings: Mutex::new(BTreeMap::new()),
        warnings: Mutex::new(Vec::new()),
        tables: Mutex::new(Vec::new()),
    };
    let evaluate = || evaluator.eval(&plan.pipeline, 0).and_then(|v| evaluator.to_table(&v));
    let final_table = if plan.force_sequential { par::run_sequential(evaluate) } else { evaluate() }?;
    timings.extend(evaluator.timings.into_inner().expect("timings lock"));
    let mut analysis_warnings = evaluator.warnings.into_inner().expect("warnings lock");
    analysis_warnings.sort_by_key(|(idx, _)| *idx);
    for (_, w) in &analysis_warnings {
        logger.warning("analysis", &w.to_string());
    }
    warnings.extend(analysis_warnings.into_iter().map(|(_, w)| w));
    let mut intermediates = evaluator.tables.into_inner().expect("tables lock");
    intermediates.sort_by_key(|(idx, _, _)| *idx);

    let ext = plan.format.extension();
    let mut planned: Vec<(String, String, ResultTable)> =
        vec![("result".into(), format!("{stem}_{id}.{ext}"), final_table)];
    for (idx, component, table) in intermediates {
        let duplicate = plan.pipeline.preorder().iter().filter(|n| n.component == component).count() > 1;
        let label = if duplicate { format!("{component}{idx}") } else { component.clone() };
        planned.push((format!("intermediate.{idx}.{component}"), format!("{stem}_{id}_{label}.{ext}"), table));
    }

    let mut outputs = Vec::new();
    let mut result_files = Vec::new();
    for (logical_name, file, table) in planned {
        let bytes = render_table(&table, plan.format, plan.decimals);
        let path = plan.output_dir.join(&file);
        write_atomic(&path, &bytes).map_err(io_err(&path))?;
        logger.info("output", &format!("wrote {} ({} rows)", path.display(), table.len()));
        outputs.push(OutputRecord { logical_name, file, sha256: sha256_hex(&bytes) });
        result_files.push(path);
    }
    timings.insert("total".into(), run_started.elapsed().as_secs_f64() * 1000.0);

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        hash_algorithm: HASH_ALGORITHM.into(),
        started_at: id.to_string(),
        analysis: stem.to_string(),
        pipeline: plan.pipeline.to_string(),
        config: plan.effective_config.entries().clone(),
        inputs,
        outputs,
        timings_ms: timings,
        warnings: warnings.iter().map(ToString::to_string).collect(),
    };
    let manifest_path = plan.output_dir.join(format!("{stem}_{id}.manifest.json"));
    write_atomic(&manifest_path, &manifest.to_json()).map_err(io_err(&manifest_path))?;
    logger.info("run", &format!("manifest {}", manifest_path.display()));

    let archive_path = match &plan.archive {
        Some(settings) => {
            logger.flush();
            let dest = settings.dir.join(format!("{stem}_{id}.zip"));
            archive::create_archive(plan, &manifest, &result_files, logger.file_path(), &dest)?;
            logger.info("archive", &format!("wrote {}", dest.display()));
            Some(dest)
        }
        None => None,
    };

    Ok(RunOutcome { manifest, manifest_path, result_files, log_path: None, archive_path })
}
