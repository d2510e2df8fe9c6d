//! Analyses over extracted code, build and variability models.
//!
//! Every analysis returns typed results plus a conversion into a
//! [`ResultTable`], which is what the pipeline writes to disk. Result order
//! is always by `(path, line)` or by feature name.

mod effects;
mod metrics;
mod mismatch;
mod table;
mod undead;

pub use effects::{
    effect_of, effects_table, feature_effect, filter_relevant, pc_finder, pc_table, FeatureEffectEntry, PcMap,
};
pub use metrics::{metrics_per_file, metrics_table, FileMetrics, VariabilityFilter};
pub use mismatch::{configuration_mismatches, mismatches_table, Mismatch};
pub use table::{Cell, ResultTable};
pub use undead::{
    dead_blocks_table, missing_features, missing_features_table, undead_analysis, DeadBlockFinding, DeadCategory,
    MissingFeature,
};
