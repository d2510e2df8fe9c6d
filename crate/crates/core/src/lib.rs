//! Static variability analysis for software product lines.
//!
//! The crate is organised along the flow of an experiment:
//!
//! * [`formula`]: propositional formulas, CNF conversion, a DPLL solver and
//!   a brute-force enumerator;
//! * [`cpp`]: the `#ifdef` code-block extractor;
//! * [`models`]: DIMACS variability models and Kbuild/CSV build models;
//! * [`analysis`]: dead blocks, missing features, presence-condition and
//!   feature-effect computation, configuration mismatches and file metrics;
//! * [`pipeline`]: configuration, the component registry and DSL, the
//!   experiment runner, caching, result writing and archiving.

pub mod analysis;
pub mod cpp;
pub mod formula;
pub mod models;
pub mod par;
pub mod pipeline;
mod warning;

pub use formula::{Assignment, Formula};
pub use warning::Warning;

/// Version string recorded in run manifests.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
