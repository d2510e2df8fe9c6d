//! Conditional code-block extraction from C sources.
//!
//! Each `#if`/`#ifdef`/`#ifndef`/`#elif`/`#else` region becomes a
//! [`CodeBlock`] carrying its own condition and its presence condition: the
//! conjunction of the enclosing block's presence condition, the negated
//! conditions of earlier branches in the same chain, and its own condition.

mod condition;
mod lines;
mod scan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::Warning;

pub use condition::{parse_cpp_condition, ConditionKind, MacroState, MacroTable, ParsedCondition};
pub use lines::{lex, Directive, LexedFile, LineKind};
pub use scan::{
    matching_files, scan_source_tree, scan_source_tree_cancellable, CodeExtractorSettings, CodeModel,
    DEFAULT_FILE_REGEX, DEFAULT_VARIABLE_REGEX,
};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{path}:{line}: unbalanced preprocessor directives")]
    UnbalancedDirectives { path: String, line: usize },
    #[error("source tree `{0}` does not exist or is not a directory")]
    SourceTreeMissing(std::path::PathBuf),
    #[error("invalid regular expression `{pattern}`: {source}")]
    InvalidRegex { pattern: String, source: regex::Error },
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("extraction cancelled")]
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlock {
    /// The directive's own condition (`true` for `#else`).
    pub condition: Formula,
    pub presence_condition: Formula,
    /// Line of the opening directive (1-based).
    pub start_line: usize,
    /// Line before the directive that closes this branch.
    pub end_line: usize,
    pub children: Vec<CodeBlock>,
}

impl CodeBlock {
    pub fn contains_line(&self, line: usize) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a CodeBlock>) {
        out.push(self);
        for child in &self.children {
            child.collect(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFileBlocks {
    /// Path relative to the source tree, `/`-separated.
    pub path: String,
    pub line_count: usize,
    /// Classification of every line; index 0 is line 1.
    pub line_kinds: Vec<LineKind>,
    pub top_blocks: Vec<CodeBlock>,
}

impl SourceFileBlocks {
    /// All blocks in pre-order (parents before children, source order).
    pub fn blocks(&self) -> Vec<&CodeBlock> {
        let mut out = Vec::new();
        for block in &self.top_blocks {
            block.collect(&mut out);
        }
        out
    }

    /// The innermost block containing each line (`None` outside all blocks).
    pub fn innermost_blocks(&self) -> Vec<Option<&CodeBlock>> {
        let mut out = vec![None; self.line_count];
        for block in self.blocks() {
            // Pre-order visits children after parents, so the deepest wins.
            for line in block.start_line..=block.end_line.min(self.line_count) {
                out[line - 1] = Some(block);
            }
        }
        out
    }

    /// Presence condition of each line; `true` outside all blocks.
    pub fn line_presence_conditions(&self) -> Vec<Formula> {
        self.innermost_blocks().into_iter().map(|b| b.map_or(Formula::True, |b| b.presence_condition.clone())).collect()
    }
}

/// Output of [`extract_blocks`] for one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileExtraction {
    pub blocks: SourceFileBlocks,
    pub warnings: Vec<Warning>,
}

struct OpenBlock {
    condition: Formula,
    presence_condition: Formula,
    start_line: usize,
    children: Vec<CodeBlock>,
}

impl OpenBlock {
    fn close(self, end_line: usize) -> CodeBlock {
        CodeBlock {
            condition: self.condition,
            presence_condition: self.presence_condition,
            start_line: self.start_line,
            end_line,
            children: self.children,
        }
    }
}

struct OpenChain {
    /// Presence condition of the enclosing block; `None` at file level.
    parent_pc: Option<Formula>,
    previous_conditions: Vec<Formula>,
    seen_else: bool,
    current: OpenBlock,
}

impl OpenChain {
    fn branch_pc(&self, condition: Option<&Formula>) -> Formula {
        let mut parts: Vec<Formula> = self.parent_pc.iter().cloned().collect();
        parts.extend(self.previous_conditions.iter().cloned().map(Formula::not));
        parts.extend(condition.cloned());
        Formula::and(parts)
    }
}

/// Extracts the conditional block tree of one file.
pub fn extract_blocks(text: &str, path: &str, handle_macros: bool) -> Result<FileExtraction, ExtractError> {
    let lexed = lex(text);
    let line_count = lexed.kinds.len();
    let mut warnings = Vec::new();
    let mut macros = MacroTable::new();
    let mut top: Vec<CodeBlock> = Vec::new();
    let mut stack: Vec<OpenChain> = Vec::new();

    let unbalanced = |line| ExtractError::UnbalancedDirectives { path: path.to_string(), line };

    for directive in &lexed.directives {
        let line = directive.line;
        let kind = match directive.keyword.as_str() {
            "if" => Some(ConditionKind::If),
            "ifdef" | "elifdef" => Some(ConditionKind::Ifdef),
            "ifndef" | "elifndef" => Some(ConditionKind::Ifndef),
            "elif" => Some(ConditionKind::Elif),
            _ => None,
        };
        let mut condition = |kind| {
            let parsed = parse_cpp_condition(&directive.body, kind, &macros);
            if let Some(reason) = parsed.unparsable {
                warnings.push(Warning::new(
                    format!("{path}:{line}"),
                    format!("unparsable condition `{}` treated as true ({reason})", directive.body),
                ));
            }
            parsed.formula
        };

        match directive.keyword.as_str() {
            "if" | "ifdef" | "ifndef" => {
                let cond = condition(kind.unwrap());
                let parent_pc = stack.last().map(|c| c.current.presence_condition.clone());
                let mut chain = OpenChain {
                    parent_pc,
                    previous_conditions: Vec::new(),
                    seen_else: false,
                    current: OpenBlock {
                        condition: Formula::True,
                        presence_condition: Formula::True,
                        start_line: line,
                        children: Vec::new(),
                    },
                };
                chain.current.presence_condition = chain.branch_pc(Some(&cond));
                chain.current.condition = cond;
                stack.push(chain);
            }
            "elif" | "elifdef" | "elifndef" => {
                let cond = condition(kind.unwrap());
                let chain = stack.last_mut().ok_or_else(|| unbalanced(line))?;
                if chain.seen_else {
                    return Err(unbalanced(line));
                }
                let previous = chain.current.condition.clone();
                chain.previous_conditions.push(previous);
                let pc = chain.branch_pc(Some(&cond));
                let next =
                    OpenBlock { condition: cond, presence_condition: pc, start_line: line, children: Vec::new() };
                let finished = std::mem::replace(&mut chain.current, next);
                push_closed(&mut stack, &mut top, finished.close(line - 1), 1);
            }
            "else" => {
                let chain = stack.last_mut().ok_or_else(|| unbalanced(line))?;
                if chain.seen_else {
                    return Err(unbalanced(line));
                }
                chain.seen_else = true;
                let previous = chain.current.condition.clone();
                chain.previous_conditions.push(previous);
                let pc = chain.branch_pc(None);
                let next = OpenBlock {
                    condition: Formula::True,
                    presence_condition: pc,
                    start_line: line,
                    children: Vec::new(),
                };
                let finished = std::mem::replace(&mut chain.current, next);
                push_closed(&mut stack, &mut top, finished.close(line - 1), 1);
            }
            "endif" => {
                let chain = stack.pop().ok_or_else(|| unbalanced(line))?;
                push_closed(&mut stack, &mut top, chain.current.close(line - 1), 0);
            }
            "define" | "undef" if handle_macros => {
                if !stack.is_empty() {
                    warnings.push(Warning::new(
                        format!("{path}:{line}"),
                        format!("conditional #{} ignored for macro handling", directive.keyword),
                    ));
                } else if directive.keyword == "define" {
                    macros.apply_define(&directive.body);
                } else {
                    macros.apply_undef(&directive.body);
                }
            }
            _ => {}
        }
    }

    if let Some(open) = stack.first() {
        return Err(unbalanced(open.current.start_line));
    }

    Ok(FileExtraction {
        blocks: SourceFileBlocks { path: path.to_string(), line_count, line_kinds: lexed.kinds, top_blocks: top },
        warnings,
    })
}

/// Attaches a closed block to its parent: the current block of the chain
/// `depth_from_top` levels below the top of the stack, or the file level.
fn push_closed(stack: &mut [OpenChain], top: &mut Vec<CodeBlock>, block: CodeBlock, depth_from_top: usize) {
    let len = stack.len();
    if len > depth_from_top {
        stack[len - 1 - depth_from_top].current.children.push(block);
    } else {
        top.push(block);
    }
}

/// Union of the variables of every block condition.
pub fn collect_code_variables(files: &[SourceFileBlocks]) -> std::collections::BTreeSet<String> {
    files.iter().flat_map(|f| f.blocks()).flat_map(|b| b.condition.variables()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Formula {
        Formula::var(name)
    }

    fn extract(text: &str) -> SourceFileBlocks {
        extract_blocks(text, "t.c", false).unwrap().blocks
    }

    #[test]
    fn if_elif_else_chain() {
        let f = extract("#if defined(A)\nx;\n#elif defined(B)\ny;\n#else\nz;\n#endif");
        let pcs: Vec<_> = f.top_blocks.iter().map(|b| b.presence_condition.clone()).collect();
        assert_eq!(
            pcs,
            vec![
                v("A"),
                Formula::and2(Formula::not(v("A")), v("B")),
                Formula::and2(Formula::not(v("A")), Formula::not(v("B"))),
            ]
        );
        let ranges: Vec<_> = f.top_blocks.iter().map(|b| (b.start_line, b.end_line)).collect();
        assert_eq!(ranges, vec![(1, 2), (3, 4), (5, 6)]);
        assert_eq!(f.top_blocks[2].condition, Formula::True);
    }

    #[test]
    fn nesting_conjoins_parent() {
        let f = extract("#ifdef A\n#ifdef B\nx;\n#endif\n#endif");
        assert_eq!(f.top_blocks.len(), 1);
        let outer = &f.top_blocks[0];
        assert_eq!(outer.presence_condition, v("A"));
        assert_eq!((outer.start_line, outer.end_line), (1, 4));
        let inner = &outer.children[0];
        assert_eq!(inner.presence_condition, Formula::and2(v("A"), v("B")));
        assert_eq!((inner.start_line, inner.end_line), (2, 3));
    }

    #[test]
    fn nested_else_excludes_within_parent() {
        let f = extract("#ifdef A\n#ifndef B\nx;\n#else\ny;\n#endif\n#endif\n");
        let children = &f.top_blocks[0].children;
        assert_eq!(children[0].presence_condition, Formula::and2(v("A"), Formula::not(v("B"))));
        assert_eq!(children[1].presence_condition, Formula::and2(v("A"), Formula::not(Formula::not(v("B")))));
    }

    #[test]
    fn unbalanced_directives() {
        for (text, line) in
            [("#endif\n", 1), ("x;\n#else\n", 2), ("#ifdef A\nx;\n", 1), ("#if A\n#else\n#elif B\n#endif", 3)]
        {
            match extract_blocks(text, "u.c", false) {
                Err(ExtractError::UnbalancedDirectives { path, line: l }) => {
                    assert_eq!(path, "u.c");
                    assert_eq!(l, line, "{text:?}");
                }
                other => panic!("expected error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn unparsable_condition_warns_and_uses_true() {
        let out = extract_blocks("#if FOO(1,2) + 3\nx;\n#endif\n", "w.c", false).unwrap();
        assert_eq!(out.blocks.top_blocks[0].presence_condition, Formula::True);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].origin, "w.c:1");
    }

    #[test]
    fn macro_handling() {
        let text = "#define CONFIG_X\n#ifdef CONFIG_X\na;\n#endif\n#undef CONFIG_X\n#ifdef CONFIG_X\nb;\n#endif\n";
        let with = extract_blocks(text, "m.c", true).unwrap().blocks;
        assert_eq!(with.top_blocks[0].presence_condition, Formula::True);
        assert_eq!(with.top_blocks[1].presence_condition, Formula::False);
        let without = extract_blocks(text, "m.c", false).unwrap().blocks;
        assert_eq!(without.top_blocks[0].presence_condition, v("CONFIG_X"));
    }

    #[test]
    fn conditional_define_is_ignored_with_warning() {
        let text = "#ifdef A\n#define B\n#endif\n#ifdef B\nx;\n#endif\n";
        let out = extract_blocks(text, "m.c", true).unwrap();
        assert_eq!(out.blocks.top_blocks[1].presence_condition, v("B"));
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn line_presence_conditions() {
        let f = extract("a;\n#ifdef A\nb;\n#ifdef B\nc;\n#endif\nd;\n#endif\ne;\n");
        let pcs = f.line_presence_conditions();
        let ab = Formula::and2(v("A"), v("B"));
        assert_eq!(
            pcs,
            vec![Formula::True, v("A"), v("A"), ab.clone(), ab, v("A"), v("A"), Formula::True, Formula::True]
        );
    }

    #[test]
    fn code_variables() {
        let f = extract("#ifdef A\n#if B && A\nx;\n#endif\n#endif\n");
        let vars: Vec<_> = collect_code_variables(&[f]).into_iter().collect();
        assert_eq!(vars, vec!["A".to_string(), "B".to_string()]);
        assert!(collect_code_variables(&[extract("int x;\n")]).is_empty());
    }

    #[test]
    fn extraction_is_deterministic() {
        let text = "#if A || B\nx;\n#elif C\n#ifdef D\ny;\n#endif\n#endif\n";
        assert_eq!(extract(text), extract(text));
    }
}
