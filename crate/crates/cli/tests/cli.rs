use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/spl")
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&fixture_dir(), dir.path());
    dir
}

fn splwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splwb")).args(args).output().unwrap()
}

fn stdout_paths(out: &Output) -> Vec<PathBuf> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(PathBuf::from).collect()
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_prints_only_the_result_path() {
    let dir = fixture();
    let out = splwb(&["run", arg(&dir.path().join("undead.properties"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let paths = stdout_paths(&out);
    assert_eq!(paths.len(), 1);
    assert!(paths[0].starts_with(dir.path().join("output")));
    assert!(fs::read_to_string(&paths[0]).unwrap().contains("contradiction-in-code"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("INFO"), "console logging defaults on");
}

#[test]
fn bare_config_path_means_run() {
    let dir = fixture();
    let out = splwb(&[arg(&dir.path().join("single_metric.properties"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_paths(&out).len(), 1);
}

#[test]
fn overrides_redirect_output_and_disable_archiving() {
    let dir = fixture();
    let elsewhere = dir.path().join("elsewhere");
    let cfg = dir.path().join("feature_effects.properties");
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("archive = true\n");
    fs::write(&cfg, text).unwrap();
    let out = splwb(&["run", arg(&cfg), "--output-dir", arg(&elsewhere), "--no-archive", "--force-sequential"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_paths(&out).iter().all(|p| p.starts_with(&elsewhere)));
    let zips = fs::read_dir(&elsewhere)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "zip"));
    assert_eq!(zips.count(), 0);
}

#[test]
fn validate_rejects_undead_without_vm() {
    let dir = fixture();
    let out = splwb(&["validate", arg(&dir.path().join("undead_no_vm.properties"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("variability.extractor"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn validate_accepts_class_style_keys() {
    let dir = fixture();
    let out = splwb(&["validate", arg(&dir.path().join("single_metric.properties"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration is valid: MetricsPerFile"));
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.properties");
    let out = splwb(&["validate", arg(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.properties"));
}

#[test]
fn unknown_log_level_is_a_usage_error() {
    let dir = fixture();
    let out = splwb(&["run", arg(&dir.path().join("undead.properties")), "--log-level", "loud"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rerun_matches_and_detects_tampering() {
    let dir = fixture();
    let cfg = dir.path().join("feature_effects.properties");
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("archive = true\narchive.include_inputs = true\n");
    fs::write(&cfg, text).unwrap();
    let out = splwb(&["run", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let archive = fs::read_dir(dir.path().join("output"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "zip"))
        .expect("archive written");

    let workspace = dir.path().join("ws");
    let out = splwb(&["rerun", arg(&archive), "--workspace", arg(&workspace)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ReproductionMatch"));
    assert!(workspace.join("output/reproduction.json").is_file());

    // Change an archived input so the rerun produces a different result.
    let tampered = dir.path().join("tampered.zip");
    rewrite_entry(&archive, &tampered, "inputs/source_tree/drivers/acpi/acpi.c", b"int acpi_stub;\n");
    let out = splwb(&["rerun", arg(&tampered), "--workspace", arg(&dir.path().join("ws2"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn components_lists_the_registry() {
    let out = splwb(&["components"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["CodeBlockExtractor", "KbuildExtractor", "UnDeadAnalysis", "FeatureEffectFinder", "MetricsPerFile"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn help_exits_successfully() {
    assert_eq!(splwb(&["--help"]).status.code(), Some(0));
    assert_eq!(splwb(&[]).status.code(), Some(1));
}

/// Copies a zip, replacing one entry's contents.
fn rewrite_entry(src: &Path, dest: &Path, name: &str, contents: &[u8]) {
    let mut zin = zip::ZipArchive::new(fs::File::open(src).unwrap()).unwrap();
    let mut zout = zip::ZipWriter::new(fs::File::create(dest).unwrap());
    for i in 0..zin.len() {
        let mut entry = zin.by_index(i).unwrap();
        let mut data = Vec::new();
        entry.read_to_end(&mut data).unwrap();
        zout.start_file(entry.name(), zip::write::SimpleFileOptions::default()).unwrap();
        zout.write_all(if entry.name() == name { contents } else { &data }).unwrap();
    }
    zout.finish().unwrap();
}
