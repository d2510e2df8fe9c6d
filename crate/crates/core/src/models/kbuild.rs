//! A small Kbuild reader mapping source files to presence conditions.
//!
//! Recognized per makefile:
//!
//! * `obj-$(CONFIG_X) += a.o sub/` (also `obj-y`, `obj-m`, `lib-*`), with
//!   `+=`, `:=`, `=` and `?=`;
//! * composite objects `foo-objs := p.o`, `foo-y += q.o`,
//!   `foo-$(CONFIG_Z) += r.o`;
//! * backslash continuations and `#` comments.
//!
//! `obj-m` collapses to the same boolean as `obj-y`. Make conditionals,
//! `$(call ...)` and variables other than `CONFIG_*` are skipped with a
//! warning.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use regex::Regex;
use thiserror::Error;

use super::{normalize_path, BuildModel};
use crate::formula::Formula;
use crate::Warning;

pub const DEFAULT_MAKEFILE_NAMES: [&str; 2] = ["Kbuild", "Makefile"];

#[derive(Debug, Error)]
pub enum KbuildError {
    #[error("build tree `{0}` does not exist or is not a directory")]
    BuildTreeMissing(PathBuf),
    #[error("directory recursion cycle at `{0}`")]
    CycleDetected(String),
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

const NON_OBJECT_PREFIXES: &[&str] = &[
    "ccflags",
    "asflags",
    "ldflags",
    "subdir-ccflags",
    "subdir-asflags",
    "hostprogs",
    "always",
    "targets",
    "extra",
    "clean-files",
    "clean-dirs",
    "subdir",
    "header-test",
    "userprogs",
];

#[derive(Debug, Clone)]
struct Rule {
    prefix: String,
    /// `None` for `-y`, `-m` and `-objs`.
    variable: Option<String>,
    items: Vec<String>,
}

struct Makefile {
    rel_path: String,
    rules: Vec<Rule>,
}

impl Makefile {
    fn composite_parts(&self, name: &str) -> Vec<&Rule> {
        self.rules.iter().filter(|r| r.prefix == name).collect()
    }
}

pub fn parse_kbuild_tree(root: &Path, makefile_names: &[&str]) -> Result<(BuildModel, Vec<Warning>), KbuildError> {
    if !root.is_dir() {
        return Err(KbuildError::BuildTreeMissing(root.to_path_buf()));
    }
    let mut walker = Walker {
        root,
        makefile_names,
        lhs: Regex::new(r"^([A-Za-z0-9_./-]+?)-(y|m|objs|\$\(([^)]*)\))$").expect("static regex"),
        config_var: Regex::new(r"^CONFIG_[A-Za-z0-9_]+$").expect("static regex"),
        pcs: BTreeMap::new(),
        warnings: Vec::new(),
        stack: Vec::new(),
    };
    walker.visit_dir("", &Formula::True)?;

    let mut model = BuildModel::new(root.display().to_string());
    for (path, pcs) in walker.pcs {
        model.entries.insert(path, Formula::or(pcs));
    }
    Ok((model, walker.warnings))
}

struct Walker<'a> {
    root: &'a Path,
    makefile_names: &'a [&'a str],
    lhs: Regex,
    config_var: Regex,
    pcs: BTreeMap<String, Vec<Formula>>,
    warnings: Vec<Warning>,
    stack: Vec<PathBuf>,
}

fn conjoin(pc: &Formula, variable: Option<&str>) -> Formula {
    match (pc, variable) {
        (_, None) => pc.clone(),
        (Formula::True, Some(v)) => Formula::var(v),
        (pc, Some(v)) => Formula::and2(pc.clone(), Formula::var(v)),
    }
}

impl Walker<'_> {
    fn visit_dir(&mut self, rel_dir: &str, pc: &Formula) -> Result<(), KbuildError> {
        let dir = self.root.join(rel_dir);
        let canonical = dir.canonicalize().unwrap_or_else(|_| dir.clone());
        if self.stack.contains(&canonical) {
            return Err(KbuildError::CycleDetected(if rel_dir.is_empty() { ".".into() } else { rel_dir.into() }));
        }
        let Some(makefile) = self.read_makefile(rel_dir)? else {
            self.warnings
                .push(Warning::new(if rel_dir.is_empty() { "." } else { rel_dir }, "no Kbuild or Makefile found"));
            return Ok(());
        };
        self.stack.push(canonical);
        for rule in makefile.rules.iter().filter(|r| r.prefix == "obj" || r.prefix == "lib") {
            let rule_pc = conjoin(pc, rule.variable.as_deref());
            for item in &rule.items {
                if let Some(sub) = item.strip_suffix('/') {
                    let sub_dir = normalize_path(&format!("{rel_dir}/{sub}"));
                    self.visit_dir(&sub_dir, &rule_pc)?;
                } else if let Some(stem) = item.strip_suffix(".o") {
                    let mut visiting = HashSet::new();
                    self.resolve_object(&makefile, rel_dir, stem, &rule_pc, &mut visiting);
                }
            }
        }
        self.stack.pop();
        Ok(())
    }

    fn resolve_object(
        &mut self,
        makefile: &Makefile,
        rel_dir: &str,
        stem: &str,
        pc: &Formula,
        visiting: &mut HashSet<String>,
    ) {
        let parts = makefile.composite_parts(stem);
        if !parts.is_empty() && visiting.insert(stem.to_string()) {
            for rule in parts {
                let part_pc = conjoin(pc, rule.variable.as_deref());
                for item in &rule.items {
                    if let Some(part) = item.strip_suffix(".o") {
                        self.resolve_object(makefile, rel_dir, part, &part_pc, visiting);
                    }
                }
            }
            visiting.remove(stem);
            return;
        }
        let base = normalize_path(&format!("{rel_dir}/{stem}"));
        let c_file = format!("{base}.c");
        let asm_file = format!("{base}.S");
        let path = if self.root.join(&c_file).is_file() {
            c_file
        } else if self.root.join(&asm_file).is_file() {
            asm_file
        } else {
            self.warnings.push(Warning::new(
                makefile.rel_path.clone(),
                format!("no source file for object `{stem}.o`; recorded as `{c_file}`"),
            ));
            c_file
        };
        let entry = self.pcs.entry(path).or_default();
        if !entry.contains(pc) {
            entry.push(pc.clone());
        }
    }

    fn read_makefile(&mut self, rel_dir: &str) -> Result<Option<Makefile>, KbuildError> {
        for name in self.makefile_names {
            let rel_path = normalize_path(&format!("{rel_dir}/{name}"));
            let full = self.root.join(&rel_path);
            if full.is_file() {
                let bytes =
                    std::fs::read(&full).map_err(|source| KbuildError::Io { path: rel_path.clone(), source })?;
                let text = String::from_utf8_lossy(&bytes);
                let rules = self.parse_rules(&rel_path, &text);
                return Ok(Some(Makefile { rel_path, rules }));
            }
        }
        Ok(None)
    }

    fn parse_rules(&mut self, rel_path: &str, text: &str) -> Vec<Rule> {
        let mut rules = Vec::new();
        for (line_no, line) in join_continuations(text) {
            let line = strip_comment(&line);
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let first_word = trimmed.split_whitespace().next().unwrap_or("");
            if matches!(first_word, "ifeq" | "ifneq" | "ifdef" | "ifndef" | "else" | "endif") {
                self.warn(rel_path, line_no, format!("make conditional `{first_word}` not supported; ignored"));
                continue;
            }
            let Some((lhs, rhs)) = split_assignment(trimmed) else {
                continue;
            };
            let Some(caps) = self.lhs.captures(lhs) else {
                continue;
            };
            let prefix = caps[1].to_string();
            if NON_OBJECT_PREFIXES.contains(&prefix.as_str()) {
                continue;
            }
            let variable = match caps.get(3) {
                Some(var) if self.config_var.is_match(var.as_str()) => Some(var.as_str().to_string()),
                Some(var) => {
                    self.warn(
                        rel_path,
                        line_no,
                        format!("variable `$({})` is not a CONFIG_ symbol; line ignored", var.as_str()),
                    );
                    continue;
                }
                None => None,
            };
            let mut items = Vec::new();
            for item in rhs.split_whitespace() {
                if item.contains("$(") || item.contains("${") {
                    self.warn(rel_path, line_no, format!("make expression `{item}` not supported; ignored"));
                } else {
                    items.push(item.to_string());
                }
            }
            rules.push(Rule { prefix, variable, items });
        }
        rules
    }

    fn warn(&mut self, rel_path: &str, line: usize, message: String) {
        self.warnings.push(Warning::new(format!("{rel_path}:{line}"), message));
    }
}

fn join_continuations(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (idx, line) in text.lines().enumerate() {
        let (start, mut acc) = pending.take().unwrap_or((idx + 1, String::new()));
        let trimmed = line.trim_end();
        if let Some(body) = trimmed.strip_suffix('\\') {
            acc.push_str(body);
            acc.push(' ');
            pending = Some((start, acc));
        } else {
            acc.push_str(trimmed);
            out.push((start, acc));
        }
    }
    if let Some(rest) = pending {
        out.push(rest);
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.find('#').map_or(line, |i| &line[..i])
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    for op in ["+=", ":=", "?="] {
        if let Some(i) = line.find(op) {
            return Some((line[..i].trim(), &line[i + op.len()..]));
        }
    }
    line.find('=').map(|i| (line[..i].trim(), &line[i + 1..]))
}
