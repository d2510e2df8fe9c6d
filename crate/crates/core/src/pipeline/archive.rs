use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use walkdir::WalkDir;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::config::{parse_properties, ExperimentConfig};
use super::manifest::{sha256_hex, RunManifest};
use super::runner::{run_experiment, BuildSource, Plan, RunOutcome};
use super::writer::write_atomic;
use super::PipelineError;

pub const CONFIG_ENTRY: &str = "config.properties";
pub const MANIFEST_ENTRY: &str = "manifest.json";

fn archive_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::ArchiveInvalid { path: path.display().to_string(), message: e.to_string() }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// `(entry name, source file)` pairs for the inputs of `plan`.
fn input_entries(plan: &Plan) -> Vec<(String, PathBuf)> {
    let mut entries = Vec::new();
    let tree = plan.code.as_ref().map(|c| c.root.clone()).or_else(|| match plan.build.as_ref().map(|b| &b.source) {
        Some(BuildSource::Kbuild(root)) => Some(root.clone()),
        _ => None,
    });
    if let Some(root) = tree {
        for entry in WalkDir::new(&root).sort_by_file_name().into_iter().flatten() {
            if entry.file_type().is_file() {
                let rel = entry.path().strip_prefix(&root).unwrap_or(entry.path());
                let rel = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                entries.push((format!("inputs/source_tree/{rel}"), entry.into_path()));
            }
        }
    }
    if let Some(BuildSource::Csv(path)) = plan.build.as_ref().map(|b| &b.source) {
        entries.push((format!("inputs/build/{}", file_name(path)), path.clone()));
    }
    if let Some(vm) = &plan.vm {
        entries.push((format!("inputs/variability/{}", file_name(&vm.path)), vm.path.clone()));
    }
    entries
}

/// Writes a zip holding the configuration, manifest, outputs, log and,
/// when enabled, the inputs.
pub fn create_archive(
    plan: &Plan,
    manifest: &RunManifest,
    outputs: &[PathBuf],
    log: Option<&Path>,
    dest: &Path,
) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io { path: dest.display().to_string(), source: e };
    let zip_err = |e: zip::result::ZipError| archive_err(dest, e);
    let options = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
    let mut zip = ZipWriter::new(std::io::Cursor::new(Vec::new()));

    let add = |zip: &mut ZipWriter<_>, name: &str, bytes: &[u8]| -> Result<(), PipelineError> {
        zip.start_file(name, options).map_err(zip_err)?;
        zip.write_all(bytes).map_err(io)
    };
    add(&mut zip, CONFIG_ENTRY, plan.effective_config.to_properties().as_bytes())?;
    add(&mut zip, MANIFEST_ENTRY, &manifest.to_json())?;
    for path in outputs {
        let bytes = std::fs::read(path).map_err(io)?;
        add(&mut zip, &format!("output/{}", file_name(path)), &bytes)?;
    }
    if let Some(log) = log {
        let bytes = std::fs::read(log).map_err(io)?;
        add(&mut zip, &format!("log/{}", file_name(log)), &bytes)?;
    }
    if plan.archive.as_ref().is_some_and(|a| a.include_inputs) {
        for (name, path) in input_entries(plan) {
            let bytes = std::fs::read(&path).map_err(io)?;
            add(&mut zip, &name, &bytes)?;
        }
    }
    let bytes = zip.finish().map_err(zip_err)?.into_inner();
    write_atomic(dest, &bytes).map_err(io)
}

/// Result of re-executing an archived experiment.
#[derive(Debug, Clone)]
pub struct RerunOutcome {
    pub original: RunManifest,
    pub rerun: RunOutcome,
    /// Logical output names whose hashes matched.
    pub compared: Vec<String>,
    pub report_path: PathBuf,
}

#[derive(Serialize)]
struct ReproductionReport<'a> {
    verdict: &'static str,
    archive: String,
    compared: &'a [String],
}

fn read_entry(archive: &mut ZipArchive<File>, name: &str, path: &Path) -> Result<Vec<u8>, PipelineError> {
    let mut entry = archive.by_name(name).map_err(|e| archive_err(path, e))?;
    let mut bytes = Vec::new();
    entry.read_to_end(&mut bytes).map_err(|e| archive_err(path, e))?;
    Ok(bytes)
}

/// The rerun configuration: inputs point into `extracted` when archived,
/// outputs go below `workspace`, and caching and archiving are off.
fn rerun_config(config: &mut ExperimentConfig, extracted: &Path, workspace: &Path) {
    let tree = extracted.join("inputs/source_tree");
    if tree.is_dir() {
        config.set("source_tree", tree.display().to_string());
    }
    for (key, dir) in [("build.extractor.csv_path", "inputs/build"), ("variability.input_file", "inputs/variability")] {
        if let Some(original) = config.get_nonempty(key) {
            let candidate = extracted.join(dir).join(file_name(Path::new(original)));
            if candidate.is_file() {
                config.set(key, candidate.display().to_string());
            }
        }
    }
    config.set("output_dir", workspace.join("output").display().to_string());
    config.set("log.dir", workspace.join("log").display().to_string());
    config.set("archive", "false");
    config.remove("archive.dir");
    config.remove("cache_dir");
    for prefix in ["code", "build", "variability"] {
        for suffix in ["read", "write"] {
            let key = format!("{prefix}.provider.cache.{suffix}");
            if config.contains(&key) {
                config.set(&key, "false");
            }
        }
    }
    config.set_base_dir(Some(workspace.to_path_buf()));
}

/// Extracts `archive_path` into `workspace`, runs the archived experiment
/// again and checks every output hash against the archived manifest.
pub fn rerun_archive(archive_path: &Path, workspace: &Path) -> Result<RerunOutcome, PipelineError> {
    let file = File::open(archive_path)
        .map_err(|e| PipelineError::Io { path: archive_path.display().to_string(), source: e })?;
    let mut archive = ZipArchive::new(file).map_err(|e| archive_err(archive_path, e))?;
    let names: BTreeSet<String> = archive.file_names().map(String::from).collect();

    let mut missing: Vec<String> =
        [CONFIG_ENTRY, MANIFEST_ENTRY].iter().filter(|n| !names.contains(**n)).map(|n| n.to_string()).collect();
    let original = if names.contains(MANIFEST_ENTRY) {
        let bytes = read_entry(&mut archive, MANIFEST_ENTRY, archive_path)?;
        Some(RunManifest::from_json(&bytes).map_err(|e| archive_err(archive_path, e))?)
    } else {
        None
    };
    if let Some(m) = &original {
        missing.extend(m.outputs.iter().map(|o| format!("output/{}", o.file)).filter(|n| !names.contains(n)));
    }
    if !missing.is_empty() {
        return Err(PipelineError::ArchiveIncomplete(missing));
    }
    let original = original.expect("checked above");

    for o in &original.outputs {
        let bytes = read_entry(&mut archive, &format!("output/{}", o.file), archive_path)?;
        let got = sha256_hex(&bytes);
        if got != o.sha256 {
            return Err(PipelineError::ReproductionMismatch {
                file: format!("output/{}", o.file),
                expected: o.sha256.clone(),
                got,
            });
        }
    }

    let extracted = workspace.join("archive");
    archive.extract(&extracted).map_err(|e| archive_err(archive_path, e))?;
    let text = std::fs::read_to_string(extracted.join(CONFIG_ENTRY))
        .map_err(|e| PipelineError::Io { path: CONFIG_ENTRY.into(), source: e })?;
    let (mut config, _) = parse_properties(&text)?;
    rerun_config(&mut config, &extracted, workspace);

    let rerun = run_experiment(&config)?;
    let mut compared = Vec::new();
    for expected in &original.outputs {
        let got =
            rerun.manifest.output(&expected.logical_name).map_or_else(|| "<missing>".to_string(), |o| o.sha256.clone());
        if got != expected.sha256 {
            return Err(PipelineError::ReproductionMismatch {
                file: expected.logical_name.clone(),
                expected: expected.sha256.clone(),
                got,
            });
        }
        compared.push(expected.logical_name.clone());
    }

    let report_path = workspace.join("output").join("reproduction.json");
    let report = ReproductionReport {
        verdict: "ReproductionMatch",
        archive: archive_path.display().to_string(),
        compared: &compared,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(&report_path, &bytes)
        .map_err(|e| PipelineError::Io { path: report_path.display().to_string(), source: e })?;
    Ok(RerunOutcome { original, rerun, compared, report_path })
}
