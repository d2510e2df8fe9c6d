//! Shared fixtures and reference implementations for integration tests.
//!
//! The reference preprocessor here is written independently of the crate:
//! it interprets `#if` chains line by line for one concrete configuration
//! (a bit mask over the corpus variables) and reports which code lines and
//! which branches survive.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VARIABLES: [&str; 12] = [
    "CONFIG_USB",
    "CONFIG_NET",
    "CONFIG_PCI",
    "CONFIG_SMP",
    "CONFIG_DEBUG",
    "CONFIG_ACPI",
    "CONFIG_PM",
    "CONFIG_BLOCK",
    "CONFIG_SND",
    "CONFIG_VIDEO",
    "CONFIG_CRYPTO",
    "CONFIG_EXT4",
];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/spl")
}

pub fn copy_dir(from: &Path, to: &Path) {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry.unwrap();
        let target = to.join(entry.path().strip_prefix(from).unwrap());
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target).unwrap();
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// A copy of the static fixture tree in a fresh temporary directory.
pub fn fixture_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), dir.path());
    dir
}

// ---------------------------------------------------------------------------
// Reference condition language.

#[derive(Debug, Clone)]
pub enum Cond {
    Const(bool),
    Defined(usize),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    pub fn eval(&self, config: u32) -> bool {
        match self {
            Cond::Const(b) => *b,
            Cond::Defined(v) => config >> v & 1 == 1,
            Cond::Not(c) => !c.eval(config),
            Cond::And(a, b) => a.eval(config) && b.eval(config),
            Cond::Or(a, b) => a.eval(config) || b.eval(config),
        }
    }
}

fn var_index(name: &str) -> usize {
    VARIABLES.iter().position(|v| *v == name).unwrap_or_else(|| panic!("unknown variable {name}"))
}

/// Parses the subset of `#if` expressions the generator emits.
fn parse_cond(text: &str) -> Cond {
    let tokens: Vec<String> = {
        let mut out = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(chars[start..i].iter().collect());
            } else if (c == '&' || c == '|') && chars.get(i + 1) == Some(&c) {
                out.push(format!("{c}{c}"));
                i += 2;
            } else {
                out.push(c.to_string());
                i += 1;
            }
        }
        out
    };
    let mut pos = 0;
    let cond = parse_or(&tokens, &mut pos);
    assert_eq!(pos, tokens.len(), "trailing tokens in {text}");
    cond
}

fn parse_or(t: &[String], pos: &mut usize) -> Cond {
    let mut left = parse_and(t, pos);
    while t.get(*pos).map(String::as_str) == Some("||") {
        *pos += 1;
        left = Cond::Or(Box::new(left), Box::new(parse_and(t, pos)));
    }
    left
}

fn parse_and(t: &[String], pos: &mut usize) -> Cond {
    let mut left = parse_unary(t, pos);
    while t.get(*pos).map(String::as_str) == Some("&&") {
        *pos += 1;
        left = Cond::And(Box::new(left), Box::new(parse_unary(t, pos)));
    }
    left
}

fn parse_unary(t: &[String], pos: &mut usize) -> Cond {
    let tok = t[*pos].clone();
    *pos += 1;
    match tok.as_str() {
        "!" => Cond::Not(Box::new(parse_unary(t, pos))),
        "(" => {
            let inner = parse_or(t, pos);
            assert_eq!(t[*pos], ")");
            *pos += 1;
            inner
        }
        "defined" => {
            let paren = t[*pos] == "(";
            if paren {
                *pos += 1;
            }
            let v = var_index(&t[*pos]);
            *pos += 1;
            if paren {
                assert_eq!(t[*pos], ")");
                *pos += 1;
            }
            Cond::Defined(v)
        }
        "0" => Cond::Const(false),
        "1" => Cond::Const(true),
        other => panic!("unexpected token {other}"),
    }
}

// ---------------------------------------------------------------------------
// Reference preprocessor.

#[derive(Debug, Clone)]
enum Line {
    Code,
    Other,
    If(Cond),
    Elif(Cond),
    Else,
    Endif,
}

#[derive(Debug, Clone)]
pub struct RefFile {
    lines: Vec<Line>,
}

/// Survivors of one configuration: 1-based code lines and branch lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Survivors {
    pub code_lines: Vec<usize>,
    pub branches: Vec<usize>,
}

impl RefFile {
    pub fn parse(text: &str) -> RefFile {
        let lines = text
            .lines()
            .map(|raw| {
                let line = raw.trim();
                if let Some(rest) = line.strip_prefix('#') {
                    let rest = rest.trim_start();
                    let (kw, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let arg = arg.trim();
                    match kw {
                        "ifdef" => Line::If(Cond::Defined(var_index(arg))),
                        "ifndef" => Line::If(Cond::Not(Box::new(Cond::Defined(var_index(arg))))),
                        "if" => Line::If(parse_cond(arg)),
                        "elif" => Line::Elif(parse_cond(arg)),
                        "else" => Line::Else,
                        "endif" => Line::Endif,
                        _ => Line::Other,
                    }
                } else if line.is_empty() || line.starts_with("//") || (line.starts_with("/*") && line.ends_with("*/"))
                {
                    Line::Other
                } else {
                    Line::Code
                }
            })
            .collect();
        RefFile { lines }
    }

    /// Opening lines of every branch (`#if`, `#elif`, `#else`).
    pub fn branch_lines(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Line::If(_) | Line::Elif(_) | Line::Else))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Branch elimination for one configuration.
    pub fn run(&self, config: u32) -> Survivors {
        // (enclosing region active, some earlier branch taken, current branch active)
        let mut stack: Vec<(bool, bool, bool)> = Vec::new();
        let mut active = true;
        let mut out = Survivors { code_lines: Vec::new(), branches: Vec::new() };
        for (i, line) in self.lines.iter().enumerate() {
            let number = i + 1;
            match line {
                Line::Code => {
                    if active {
                        out.code_lines.push(number);
                    }
                }
                Line::Other => {}
                Line::If(c) => {
                    let take = active && c.eval(config);
                    stack.push((active, take, take));
                    active = take;
                }
                Line::Elif(c) => {
                    let top = stack.last_mut().expect("balanced");
                    let take = top.0 && !top.1 && c.eval(config);
                    top.1 |= take;
                    top.2 = take;
                    active = take;
                }
                Line::Else => {
                    let top = stack.last_mut().expect("balanced");
                    let take = top.0 && !top.1;
                    top.1 = true;
                    top.2 = take;
                    active = take;
                }
                Line::Endif => {
                    let (outer, _, _) = stack.pop().expect("balanced");
                    active = outer;
                }
            }
            if matches!(line, Line::If(_) | Line::Elif(_) | Line::Else) && active {
                out.branches.push(number);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Synthetic corpus.

#[derive(Debug, Clone)]
pub struct GenFile {
    pub path: String,
    pub text: String,
    /// Variables the file mentions, as indices into [`VARIABLES`].
    pub vars: Vec<usize>,
    /// Conjunction of literals that includes the file in the build.
    pub build: Vec<(usize, bool)>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub files: Vec<GenFile>,
    /// DIMACS clauses over variable ids `index + 1`.
    pub vm_clauses: Vec<Vec<i32>>,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    vars: Vec<usize>,
    out: Vec<String>,
    counter: usize,
}

impl Gen<'_> {
    fn var(&mut self) -> &'static str {
        VARIABLES[*self.vars.choose(self.rng).unwrap()]
    }

    fn code(&mut self) {
        self.counter += 1;
        let line = match self.rng.gen_range(0..10) {
            0 => String::new(),
            1 => "// note".to_string(),
            2 => format!("/* block {} */", self.counter),
            _ => format!("int v{} = {};", self.counter, self.rng.gen_range(0..100)),
        };
        self.out.push(line);
    }

    fn condition(&mut self) -> String {
        let (a, b) = (self.var(), self.var());
        match self.rng.gen_range(0..12) {
            0 | 7..=10 => format!("defined({a})"),
            1 => format!("!defined({a})"),
            2 => format!("defined({a}) && !defined({b})"),
            3 => format!("defined({a}) || defined({b})"),
            4 => format!("(defined({a}) || defined {b}) && !defined({})", self.var()),
            5 | 6 => format!("defined({a}) && defined({b})"),
            _ => "0".to_string(),
        }
    }

    fn body(&mut self, depth: usize) {
        let items = self.rng.gen_range(1..4);
        for _ in 0..items {
            if depth < 3 && self.rng.gen_bool(0.45) {
                self.chain(depth + 1);
            } else {
                for _ in 0..self.rng.gen_range(1..3) {
                    self.code();
                }
            }
        }
    }

    fn chain(&mut self, depth: usize) {
        let opener = match self.rng.gen_range(0..4) {
            0 => format!("#ifdef {}", self.var()),
            1 => format!("#ifndef {}", self.var()),
            _ => format!("#if {}", self.condition()),
        };
        let contradiction = opener.strip_prefix("#ifdef ").map(String::from);
        self.out.push(opener);
        if let (Some(v), true) = (contradiction, self.rng.gen_bool(0.15)) {
            self.out.push(format!("#ifndef {v}"));
            self.code();
            self.out.push("#endif".into());
        }
        self.body(depth);
        for _ in 0..self.rng.gen_range(0..3) {
            let c = self.condition();
            self.out.push(format!("#elif {c}"));
            self.body(depth);
        }
        if self.rng.gen_bool(0.4) {
            self.out.push("#else".into());
            self.body(depth);
        }
        self.out.push("#endif".into());
    }
}

const DIRS: [&str; 5] = ["kernel", "drivers/usb", "drivers/net", "fs/ext4", "sound"];

/// `count` files with at most eight variables each, drawn from twelve.
pub fn generate_corpus(seed: u64, count: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut files = Vec::new();
    for i in 0..count {
        let mut pool: Vec<usize> = (0..VARIABLES.len()).collect();
        pool.shuffle(&mut rng);
        let k = rng.gen_range(3..=8);
        let vars: Vec<usize> = pool[..k].to_vec();
        let mut g = Gen { rng: &mut rng, vars: vars.clone(), out: Vec::new(), counter: 0 };
        g.code();
        for _ in 0..g.rng.gen_range(2..5) {
            g.chain(1);
            g.code();
        }
        let text = g.out.join("\n") + "\n";
        let build = match rng.gen_range(0..4) {
            0 | 1 => Vec::new(),
            2 => vec![(vars[0], true)],
            _ => vec![(vars[0], true), (pool[k], false)],
        };
        let mut used: Vec<usize> = vars.iter().copied().chain(build.iter().map(|(v, _)| *v)).collect();
        used.sort_unstable();
        used.dedup();
        let path = format!("{}/f{i:02}.c", DIRS[i % DIRS.len()]);
        files.push(GenFile { path, text, vars: used, build });
    }
    let mut vm_clauses = Vec::new();
    for _ in 0..5 {
        let a = rng.gen_range(0..VARIABLES.len()) as i32 + 1;
        let mut b = rng.gen_range(0..VARIABLES.len()) as i32 + 1;
        if b == a {
            b = b % VARIABLES.len() as i32 + 1;
        }
        let sa = if rng.gen_bool(0.5) { a } else { -a };
        let sb = if rng.gen_bool(0.5) { b } else { -b };
        vm_clauses.push(vec![sa, sb]);
    }
    Corpus { files, vm_clauses }
}

impl Corpus {
    pub fn build_included(file: &GenFile, config: u32) -> bool {
        file.build.iter().all(|(v, pos)| (config >> v & 1 == 1) == *pos)
    }

    pub fn vm_allows(&self, config: u32) -> bool {
        self.vm_clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let bit = config >> (lit.unsigned_abs() - 1) & 1 == 1;
                if lit > 0 {
                    bit
                } else {
                    !bit
                }
            })
        })
    }

    pub fn build_csv(&self) -> String {
        let mut out = String::from("path,presence_condition\n");
        for f in &self.files {
            let pc = if f.build.is_empty() {
                "true".to_string()
            } else {
                f.build
                    .iter()
                    .map(|(v, pos)| if *pos { VARIABLES[*v].to_string() } else { format!("!{}", VARIABLES[*v]) })
                    .collect::<Vec<_>>()
                    .join(" && ")
            };
            out.push_str(&format!("{},{}\n", f.path, pc));
        }
        out
    }

    pub fn dimacs(&self) -> String {
        let mut out = String::new();
        for (i, v) in VARIABLES.iter().enumerate() {
            out.push_str(&format!("c {} {v}\n", i + 1));
        }
        out.push_str(&format!("p cnf {} {}\n", VARIABLES.len(), self.vm_clauses.len()));
        for clause in &self.vm_clauses {
            let lits: Vec<String> = clause.iter().map(ToString::to_string).collect();
            out.push_str(&format!("{} 0\n", lits.join(" ")));
        }
        out
    }

    /// Writes `source/`, `build.csv` and `model.dimacs` below `dir`.
    pub fn write_to(&self, dir: &Path) {
        for f in &self.files {
            let path = dir.join("source").join(&f.path);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(path, &f.text).unwrap();
        }
        std::fs::write(dir.join("build.csv"), self.build_csv()).unwrap();
        std::fs::write(dir.join("model.dimacs"), self.dimacs()).unwrap();
    }
}

/// Configurations over the listed variables, as masks over all variables.
pub fn configurations(vars: &[usize]) -> impl Iterator<Item = u32> + '_ {
    (0u32..1 << vars.len()).map(move |bits| {
        vars.iter().enumerate().fold(0u32, |mask, (i, v)| if bits >> i & 1 == 1 { mask | 1 << v } else { mask })
    })
}
