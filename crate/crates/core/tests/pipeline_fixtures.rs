//! End-to-end runs over the static fixture product line.
//!
//! Fixture facts the expectations rest on: the VM has `ACPI_DEBUG -> ACPI`
//! and `NET -> SMP`; `drivers/acpi/`, `net/` and `kernel/debug.o` are built
//! under `CONFIG_ACPI`, `CONFIG_NET` and `CONFIG_DEBUG` respectively.

mod common;

use std::path::Path;

use common::fixture_copy;
use splwb_core::pipeline::{hash_file, load_config, run_experiment, ExperimentConfig, RunOutcome};

fn config(dir: &Path, name: &str) -> ExperimentConfig {
    load_config(&dir.join(name)).unwrap().0
}

fn result_text(outcome: &RunOutcome) -> String {
    std::fs::read_to_string(&outcome.result_files[0]).unwrap()
}

#[test]
fn undead_reports_code_contradiction_and_vm_dead_block() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "undead.properties")).unwrap();
    assert_eq!(
        result_text(&outcome),
        "Source,Start,End,Category,PresenceCondition,FilePresenceCondition\n\
         kernel/core.c,18,20,contradiction-in-code,CONFIG_DEBUG && !CONFIG_DEBUG,true\n\
         net/socket.c,6,7,dead-under-vm,CONFIG_NET && !CONFIG_SMP,CONFIG_NET\n"
    );
}

#[test]
fn missing_features_names_the_undeclared_symbol() {
    let dir = fixture_copy();
    let mut cfg = config(dir.path(), "undead.properties");
    cfg.set("analysis", "MissingFeatures");
    let outcome = run_experiment(&cfg).unwrap();
    assert_eq!(result_text(&outcome), "Feature,Location\nCONFIG_GHOST,kernel/core.c:27\n");
}

#[test]
fn feature_effects_with_intermediate_presence_conditions() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "feature_effects.properties")).unwrap();
    assert_eq!(
        result_text(&outcome),
        "Feature,FeatureEffect\n\
         CONFIG_ACPI,true\n\
         CONFIG_ACPI_DEBUG,CONFIG_ACPI\n\
         CONFIG_DEBUG,true\n\
         CONFIG_DEBUG_LEVEL,CONFIG_DEBUG\n\
         CONFIG_NET,true\n\
         CONFIG_SMP,true\n"
    );
    assert_eq!(outcome.result_files.len(), 2);
    let pcs = std::fs::read_to_string(&outcome.result_files[1]).unwrap();
    assert!(pcs.starts_with("Feature,PresenceCondition\n"));
    assert!(pcs.contains("CONFIG_ACPI_DEBUG,CONFIG_ACPI && CONFIG_ACPI_DEBUG\n"));
    // The relevance filter applies to the final table only.
    assert!(pcs.contains("CONFIG_GHOST,CONFIG_GHOST\n"));
    assert!(outcome.manifest.output("intermediate.1.PcFinder").is_some());
}

#[test]
fn mismatch_where_the_model_allows_an_ineffective_selection() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "mismatches.properties")).unwrap();
    let text = result_text(&outcome);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{text}");
    assert!(rows[0].starts_with("CONFIG_DEBUG_LEVEL,CONFIG_DEBUG,"), "{text}");
    assert!(rows[0].contains("CONFIG_DEBUG=0") && rows[0].contains("CONFIG_DEBUG_LEVEL=1"), "{text}");
}

#[test]
fn metrics_csv_is_rounded_to_two_decimals() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "single_metric.properties")).unwrap();
    assert_eq!(
        result_text(&outcome),
        "Source,DLoC,LoF,PLoF\n\
         drivers/acpi/acpi.c,5,5,100.00\n\
         kernel/core.c,12,9,75.00\n\
         kernel/debug.c,4,2,50.00\n\
         kernel/sample.c,10,4,40.00\n\
         lib/string.c,7,0,0.00\n\
         net/socket.c,4,4,100.00\n"
    );
}

#[test]
fn json_output_keeps_full_precision() {
    let dir = fixture_copy();
    std::fs::write(dir.path().join("source/lib/third.c"), "#ifdef CONFIG_NET\nint a;\n#endif\nint b;\nint c;\n")
        .unwrap();
    let mut cfg = config(dir.path(), "single_metric.properties");
    cfg.set("analysis.output.format", "json");
    let outcome = run_experiment(&cfg).unwrap();
    assert!(outcome.result_files[0].extension().is_some_and(|e| e == "json"));
    let value: serde_json::Value = serde_json::from_slice(&std::fs::read(&outcome.result_files[0]).unwrap()).unwrap();
    assert_eq!(value["columns"], serde_json::json!(["Source", "DLoC", "LoF", "PLoF"]));
    let third = value["rows"].as_array().unwrap().iter().find(|r| r[0] == "lib/third.c").unwrap();
    assert_eq!(third[3].as_f64().unwrap(), 100.0 / 3.0);
}

#[test]
fn manifest_records_hashes_of_inputs_and_outputs() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "single_metric.properties")).unwrap();
    let m = &outcome.manifest;
    assert_eq!(m.hash_algorithm, "SHA-256");
    let dimacs = m.inputs.values().find(|r| r.path.ends_with("model.dimacs")).expect("VM input recorded");
    assert_eq!(dimacs.sha256, hash_file(&dir.path().join("model.dimacs")).unwrap());
    let result = m.output("result").unwrap();
    assert_eq!(result.sha256, hash_file(&outcome.result_files[0]).unwrap());
    let on_disk: serde_json::Value = serde_json::from_slice(&std::fs::read(&outcome.manifest_path).unwrap()).unwrap();
    assert_eq!(on_disk["outputs"][0]["sha256"], result.sha256.as_str());
}

#[test]
fn second_run_reads_cached_models_with_identical_results() {
    let dir = fixture_copy();
    let cfg = config(dir.path(), "single_metric.properties");
    let first = run_experiment(&cfg).unwrap();
    assert!(dir.path().join("cache/build").read_dir().unwrap().next().is_some());
    assert!(dir.path().join("cache/vm").read_dir().unwrap().next().is_some());
    // Code caching is switched off in this configuration.
    assert!(!dir.path().join("cache/code").exists());
    let second = run_experiment(&cfg).unwrap();
    assert_ne!(first.result_files[0], second.result_files[0]);
    assert_eq!(result_text(&first), result_text(&second));
    let log = std::fs::read_to_string(second.log_path.unwrap()).unwrap();
    assert!(log.lines().any(|l| l.contains("[build]") && l.contains("cache hit")), "{log}");
    assert!(log.lines().any(|l| l.contains("[variability]") && l.contains("cache hit")), "{log}");
}

#[test]
fn log_file_is_written_to_the_log_directory() {
    let dir = fixture_copy();
    let outcome = run_experiment(&config(dir.path(), "single_metric.properties")).unwrap();
    let log = outcome.log_path.expect("log.file is enabled");
    assert!(log.starts_with(dir.path().join("log")));
    let text = std::fs::read_to_string(log).unwrap();
    assert!(text.lines().any(|l| l.starts_with("INFO ")));
    assert!(text.contains("plugins_dir"), "ignored keys are reported in the log");
}
