use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Cell, ResultTable};
use crate::cpp::CodeModel;
use crate::formula::{is_satisfiable, Formula};
use crate::models::{BuildModel, VariabilityModel};
use crate::{par, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeadCategory {
    /// Unsatisfiable from the code and build conditions alone.
    ContradictionInCode,
    /// Satisfiable on its own, but excluded by the variability model.
    DeadUnderVm,
}

impl fmt::Display for DeadCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeadCategory::ContradictionInCode => "contradiction-in-code",
            DeadCategory::DeadUnderVm => "dead-under-vm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadBlockFinding {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub block_pc: Formula,
    pub file_pc: Formula,
    pub category: DeadCategory,
}

fn file_pc(build: &BuildModel, path: &str, warnings: &mut Vec<Warning>) -> Formula {
    match build.presence_condition(path) {
        Some(pc) => pc.clone(),
        None => {
            warnings.push(Warning::new(path, "no build presence condition; treated as true"));
            Formula::True
        }
    }
}

/// Blocks whose presence condition is unsatisfiable together with the
/// variability model and the file's build condition.
pub fn undead_analysis(
    code: &CodeModel,
    build: &BuildModel,
    vm: &VariabilityModel,
) -> (Vec<DeadBlockFinding>, Vec<Warning>) {
    let mut warnings = Vec::new();
    let mut jobs = Vec::new();
    for file in &code.files {
        let fpc = file_pc(build, &file.path, &mut warnings);
        for block in file.blocks() {
            jobs.push((file.path.as_str(), fpc.clone(), block));
        }
    }

    let results = par::map(&jobs, |(path, fpc, block)| {
        let code_and_build = Formula::and2(fpc.clone(), block.presence_condition.clone());
        let full = Formula::and2(vm.constraint.clone(), code_and_build.clone());
        if is_satisfiable(&full) {
            return None;
        }
        let category =
            if is_satisfiable(&code_and_build) { DeadCategory::DeadUnderVm } else { DeadCategory::ContradictionInCode };
        Some(DeadBlockFinding {
            path: path.to_string(),
            start_line: block.start_line,
            end_line: block.end_line,
            block_pc: block.presence_condition.clone(),
            file_pc: fpc.clone(),
            category,
        })
    });

    let mut findings: Vec<DeadBlockFinding> = results.into_iter().flatten().collect();
    findings.sort_by(|a, b| (&a.path, a.start_line).cmp(&(&b.path, b.start_line)));
    (findings, warnings)
}

pub fn dead_blocks_table(findings: &[DeadBlockFinding]) -> ResultTable {
    let mut table = ResultTable::new(
        "UnDeadAnalysis",
        &["Source", "Start", "End", "Category", "PresenceCondition", "FilePresenceCondition"],
    );
    for f in findings {
        table.push_row(vec![
            f.path.clone().into(),
            f.start_line.into(),
            f.end_line.into(),
            f.category.to_string().into(),
            f.block_pc.to_string().into(),
            f.file_pc.to_string().into(),
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingFeature {
    pub feature: String,
    /// First occurrence: `path:line` for code, `path (build)` for the build model.
    pub location: String,
}

/// Variables matching `variable_regex` used in code or build conditions but
/// absent from the variability model.
pub fn missing_features(
    code: &CodeModel,
    build: Option<&BuildModel>,
    vm: &VariabilityModel,
    variable_regex: &Regex,
) -> Vec<MissingFeature> {
    let mut found: BTreeMap<String, String> = BTreeMap::new();
    let mut note = |name: String, location: &dyn Fn() -> String| {
        if variable_regex.is_match(&name) && !vm.contains(&name) && !found.contains_key(&name) {
            found.insert(name, location());
        }
    };
    for file in &code.files {
        for block in file.blocks() {
            for name in block.condition.variables_ordered() {
                note(name, &|| format!("{}:{}", file.path, block.start_line));
            }
        }
    }
    if let Some(build) = build {
        for (path, pc) in &build.entries {
            for name in pc.variables_ordered() {
                note(name, &|| format!("{path} (build)"));
            }
        }
    }
    found.into_iter().map(|(feature, location)| MissingFeature { feature, location }).collect()
}

pub fn missing_features_table(missing: &[MissingFeature]) -> ResultTable {
    let mut table = ResultTable::new("MissingFeatures", &["Feature", "Location"]);
    for m in missing {
        table.push_row(vec![Cell::from(m.feature.clone()), Cell::from(m.location.clone())]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpp::{extract_blocks, CodeModel};
    use crate::models::parse_dimacs;

    fn code(files: &[(&str, &str)]) -> CodeModel {
        CodeModel {
            files: files.iter().map(|(p, t)| extract_blocks(t, p, false).unwrap().blocks).collect(),
            warnings: vec![],
        }
    }

    fn vm(text: &str) -> VariabilityModel {
        parse_dimacs(text, "vm").unwrap().0
    }

    fn build_all_true(code: &CodeModel) -> BuildModel {
        let mut b = BuildModel::new("b");
        for f in &code.files {
            b.entries.insert(f.path.clone(), Formula::True);
        }
        b
    }

    #[test]
    fn contradiction_in_code() {
        let c = code(&[("a.c", "#ifdef A\n#ifndef A\nx;\n#endif\n#endif\n")]);
        let (findings, _) = undead_analysis(&c, &build_all_true(&c), &vm("c 1 A\np cnf 1 0\n"));
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].category, DeadCategory::ContradictionInCode);
        assert_eq!((findings[0].start_line, findings[0].end_line), (2, 3));
    }

    #[test]
    fn dead_under_vm() {
        let c = code(&[("a.c", "#ifdef A\nx;\n#endif\n")]);
        let (findings, warnings) = undead_analysis(&c, &build_all_true(&c), &vm("c 1 A\np cnf 1 1\n-1 0\n"));
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].category, DeadCategory::DeadUnderVm);
        assert!(warnings.is_empty());
    }

    #[test]
    fn build_condition_participates() {
        let c = code(&[("a.c", "#ifdef B\nx;\n#endif\n")]);
        let mut b = BuildModel::new("b");
        b.entries.insert("a.c".into(), Formula::var("A"));
        let (findings, _) = undead_analysis(&c, &b, &vm("c 1 A\nc 2 B\np cnf 2 1\n-1 -2 0\n"));
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].category, DeadCategory::DeadUnderVm);
    }

    #[test]
    fn missing_build_pc_warns() {
        let c = code(&[("a.c", "#ifdef A\nx;\n#endif\n")]);
        let (findings, warnings) = undead_analysis(&c, &BuildModel::new("b"), &vm("c 1 A\np cnf 1 0\n"));
        assert!(findings.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn findings_are_ordered() {
        let c =
            code(&[("b.c", "#if 0\nx;\n#endif\n"), ("a.c", "#ifdef A\n#endif\n#if 0\ny;\n#endif\n#if 0\n#endif\n")]);
        let (findings, _) = undead_analysis(&c, &build_all_true(&c), &vm("c 1 A\np cnf 1 0\n"));
        let keys: Vec<_> = findings.iter().map(|f| (f.path.as_str(), f.start_line)).collect();
        assert_eq!(keys, vec![("a.c", 3), ("a.c", 6), ("b.c", 1)]);
        assert_eq!(dead_blocks_table(&findings).len(), 3);
    }

    #[test]
    fn missing_features_examples() {
        let re = Regex::new("^CONFIG_\\w+$").unwrap();
        let c = code(&[("a.c", "#if defined(CONFIG_GHOST) || defined(CONFIG_A) || defined(OTHER)\n#endif\n")]);
        let model = vm("c 1 CONFIG_A\np cnf 1 0\n");
        let missing = missing_features(&c, None, &model, &re);
        assert_eq!(missing, vec![MissingFeature { feature: "CONFIG_GHOST".into(), location: "a.c:1".into() }]);

        let mut b = BuildModel::new("b");
        b.entries.insert("x.c".into(), Formula::var("CONFIG_BUILD_ONLY"));
        let missing = missing_features(&c, Some(&b), &model, &re);
        assert_eq!(missing[0].feature, "CONFIG_BUILD_ONLY");
        assert_eq!(missing[0].location, "x.c (build)");

        let clean = code(&[("a.c", "#ifdef CONFIG_A\n#endif\n")]);
        assert!(missing_features(&clean, None, &model, &re).is_empty());
    }
}
