//! Component registry and the pipeline wiring language.
//!
//! ```text
//! node := IDENT '(' [ node (',' node)* ] ')'
//! ```
//!
//! Fully qualified names resolve through their last `.`-separated segment.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// The kind of value flowing along a pipeline edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DataKind {
    CodeModel,
    BuildModel,
    VariabilityModel,
    PresenceConditions,
    FeatureEffects,
    Table,
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtractorPipeline {
    Code,
    Build,
    Variability,
}

impl ExtractorPipeline {
    pub fn key_prefix(self) -> &'static str {
        match self {
            ExtractorPipeline::Code => "code",
            ExtractorPipeline::Build => "build",
            ExtractorPipeline::Variability => "variability",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSpec {
    pub name: &'static str,
    pub inputs: &'static [DataKind],
    /// Leading inputs that must be supplied; the rest are optional.
    pub required: usize,
    pub output: DataKind,
    /// For terminals, the extractor pipeline that feeds them.
    pub terminal_of: Option<ExtractorPipeline>,
}

impl ComponentSpec {
    pub fn arity_text(&self) -> String {
        if self.required == self.inputs.len() {
            self.required.to_string()
        } else {
            format!("{}..{}", self.required, self.inputs.len())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractorSpec {
    pub name: &'static str,
    pub pipeline: ExtractorPipeline,
}

use DataKind::*;

const COMPONENTS: &[ComponentSpec] = &[
    ComponentSpec {
        name: "cmComponent",
        inputs: &[],
        required: 0,
        output: CodeModel,
        terminal_of: Some(ExtractorPipeline::Code),
    },
    ComponentSpec {
        name: "bmComponent",
        inputs: &[],
        required: 0,
        output: BuildModel,
        terminal_of: Some(ExtractorPipeline::Build),
    },
    ComponentSpec {
        name: "vmComponent",
        inputs: &[],
        required: 0,
        output: VariabilityModel,
        terminal_of: Some(ExtractorPipeline::Variability),
    },
    ComponentSpec {
        name: "UnDeadAnalysis",
        inputs: &[CodeModel, BuildModel, VariabilityModel],
        required: 3,
        output: Table,
        terminal_of: None,
    },
    ComponentSpec {
        name: "MissingFeatures",
        inputs: &[CodeModel, BuildModel, VariabilityModel],
        required: 3,
        output: Table,
        terminal_of: None,
    },
    ComponentSpec {
        name: "PcFinder",
        inputs: &[CodeModel, BuildModel],
        required: 1,
        output: PresenceConditions,
        terminal_of: None,
    },
    ComponentSpec {
        name: "FeatureEffectFinder",
        inputs: &[PresenceConditions],
        required: 1,
        output: FeatureEffects,
        terminal_of: None,
    },
    ComponentSpec {
        name: "ConfigurationMismatches",
        inputs: &[FeatureEffects, VariabilityModel],
        required: 2,
        output: Table,
        terminal_of: None,
    },
    ComponentSpec {
        name: "MetricsPerFile",
        inputs: &[CodeModel, VariabilityModel],
        required: 1,
        output: Table,
        terminal_of: None,
    },
];

const EXTRACTORS: &[ExtractorSpec] = &[
    ExtractorSpec { name: "CodeBlockExtractor", pipeline: ExtractorPipeline::Code },
    ExtractorSpec { name: "KbuildExtractor", pipeline: ExtractorPipeline::Build },
    ExtractorSpec { name: "CsvBuildModel", pipeline: ExtractorPipeline::Build },
    ExtractorSpec { name: "DimacsVmExtractor", pipeline: ExtractorPipeline::Variability },
];

const NAME_ALIASES: &[(&str, &str)] = &[
    ("MetricsRunner", "MetricsPerFile"),
    ("DeadCodeFinder", "UnDeadAnalysis"),
    ("KbuildMinerExtractor", "KbuildExtractor"),
    ("KconfigReaderExtractor", "DimacsVmExtractor"),
];

/// Value of the `analysis` key that selects a wiring from `analysis.pipeline`.
pub const CONFIGURED_PIPELINE: &str = "ConfiguredPipelineAnalysis";

/// Strips a package prefix and applies compatibility aliases.
pub fn short_name(name: &str) -> &str {
    let last = name.rsplit('.').next().unwrap_or(name);
    NAME_ALIASES.iter().find(|(alias, _)| *alias == last).map_or(last, |(_, canonical)| canonical)
}

/// The compiled-in set of extractors and pipeline components.
#[derive(Debug, Clone, Copy, Default)]
pub struct Registry;

impl Registry {
    pub fn builtin() -> Registry {
        Registry
    }

    pub fn components(&self) -> &'static [ComponentSpec] {
        COMPONENTS
    }

    pub fn extractors(&self) -> &'static [ExtractorSpec] {
        EXTRACTORS
    }

    pub fn component(&self, name: &str) -> Option<&'static ComponentSpec> {
        let name = short_name(name);
        COMPONENTS.iter().find(|c| c.name == name)
    }

    pub fn extractor(&self, name: &str) -> Option<&'static ExtractorSpec> {
        let name = short_name(name);
        EXTRACTORS.iter().find(|e| e.name == name)
    }

    /// The wiring used when `analysis` names a single component.
    pub fn default_pipeline(&self, analysis: &str, has_build: bool, has_vm: bool) -> Option<PipelineNode> {
        let terminal = |name: &str| PipelineNode::new(name, vec![]);
        let code = || terminal("cmComponent");
        let build = || terminal("bmComponent");
        let vm = || terminal("vmComponent");
        let pcs = || {
            let mut args = vec![code()];
            if has_build {
                args.push(build());
            }
            PipelineNode::new("PcFinder", args)
        };
        let spec = self.component(analysis)?;
        Some(match spec.name {
            "UnDeadAnalysis" | "MissingFeatures" => PipelineNode::new(spec.name, vec![code(), build(), vm()]),
            "PcFinder" => pcs(),
            "FeatureEffectFinder" => PipelineNode::new(spec.name, vec![pcs()]),
            "ConfigurationMismatches" => {
                PipelineNode::new(spec.name, vec![PipelineNode::new("FeatureEffectFinder", vec![pcs()]), vm()])
            }
            "MetricsPerFile" => {
                let mut args = vec![code()];
                if has_vm {
                    args.push(vm());
                }
                PipelineNode::new(spec.name, args)
            }
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineNode {
    /// Canonical component name.
    pub component: String,
    pub args: Vec<PipelineNode>,
}

impl PipelineNode {
    pub fn new(component: impl Into<String>, args: Vec<PipelineNode>) -> Self {
        PipelineNode { component: component.into(), args }
    }

    pub fn is_terminal(&self) -> bool {
        self.args.is_empty() && matches!(self.component.as_str(), "cmComponent" | "bmComponent" | "vmComponent")
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Vec<&PipelineNode> {
        let mut out = vec![self];
        for a in &self.args {
            out.extend(a.preorder());
        }
        out
    }

    /// Nodes in post-order: arguments before the node consuming them.
    pub fn postorder(&self) -> Vec<&PipelineNode> {
        let mut out = Vec::new();
        for a in &self.args {
            out.extend(a.postorder());
        }
        out.push(self);
        out
    }
}

impl fmt::Display for PipelineNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.component)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: String, got: usize },
    #[error("`{name}` argument {position} must produce {expected}, got {got}")]
    TypeMismatch { name: String, position: usize, expected: DataKind, got: DataKind },
    #[error("syntax error at offset {position}: {message}")]
    SyntaxError { position: usize, message: String },
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError::SyntaxError { position: self.pos, message: message.into() }
    }

    fn expect(&mut self, ch: char) -> Result<(), DslError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{ch}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, DslError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len =
            rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a component name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn node(&mut self, registry: &Registry) -> Result<(PipelineNode, DataKind), DslError> {
        let raw = self.ident()?;
        let spec = registry.component(raw).ok_or_else(|| DslError::UnknownComponent(raw.to_string()))?;
        self.expect('(')?;
        let mut args = Vec::new();
        let mut kinds = Vec::new();
        self.skip_ws();
        if !self.text[self.pos..].starts_with(')') {
            loop {
                let (arg, kind) = self.node(registry)?;
                args.push(arg);
                kinds.push(kind);
                self.skip_ws();
                if self.text[self.pos..].starts_with(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(')')?;
        if args.len() < spec.required || args.len() > spec.inputs.len() {
            return Err(DslError::ArityMismatch {
                name: spec.name.into(),
                expected: spec.arity_text(),
                got: args.len(),
            });
        }
        for (i, (kind, expected)) in kinds.iter().zip(spec.inputs).enumerate() {
            if kind != expected {
                return Err(DslError::TypeMismatch {
                    name: spec.name.into(),
                    position: i + 1,
                    expected: *expected,
                    got: *kind,
                });
            }
        }
        Ok((PipelineNode::new(spec.name, args), spec.output))
    }
}

/// Parses and type-checks a pipeline expression.
pub fn parse_pipeline_dsl(text: &str, registry: &Registry) -> Result<PipelineNode, DslError> {
    let mut parser = Parser { text, pos: 0 };
    let (node, _) = parser.node(registry)?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(node)
}
