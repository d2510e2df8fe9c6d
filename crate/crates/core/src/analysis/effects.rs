use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ResultTable;
use crate::cpp::CodeModel;
use crate::formula::{simplify, Formula};
use crate::models::{BuildModel, VariabilityModel};
use crate::par;

/// Feature name to the distinct simplified presence conditions mentioning it.
pub type PcMap = BTreeMap<String, BTreeSet<Formula>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEffectEntry {
    pub feature: String,
    /// Never mentions `feature`.
    pub effect: Formula,
}

fn record(map: &mut PcMap, pc: Formula) {
    for name in pc.variables() {
        map.entry(name).or_default().insert(pc.clone());
    }
}

/// Collects presence conditions per variable.
///
/// With a build model, every non-trivial file condition is collected too, and
/// block conditions are conjoined with their file condition when
/// `conjoin_build` is set.
pub fn pc_finder(code: &CodeModel, build: Option<&BuildModel>, conjoin_build: bool) -> PcMap {
    let mut map = PcMap::new();
    if let Some(build) = build {
        for pc in build.entries.values() {
            record(&mut map, simplify(pc));
        }
    }
    for file in &code.files {
        let file_pc = match build {
            Some(b) if conjoin_build => b.presence_condition(&file.path).cloned(),
            _ => None,
        };
        for block in file.blocks() {
            let pc = match &file_pc {
                Some(fpc) => Formula::and2(fpc.clone(), block.presence_condition.clone()),
                None => block.presence_condition.clone(),
            };
            record(&mut map, simplify(&pc));
        }
    }
    map
}

pub fn pc_table(pcs: &PcMap) -> ResultTable {
    let mut table = ResultTable::new("PcFinder", &["Feature", "PresenceCondition"]);
    for (feature, set) in pcs {
        for pc in set {
            table.push_row(vec![feature.clone().into(), pc.to_string().into()]);
        }
    }
    table
}

/// The condition under which `feature` changes at least one of `pcs`.
pub fn effect_of(feature: &str, pcs: &BTreeSet<Formula>) -> Formula {
    let disjuncts = pcs.iter().map(|pc| Formula::xor(pc.substitute(feature, true), pc.substitute(feature, false)));
    simplify(&Formula::or(disjuncts))
}

/// Feature effects for every feature in `pcs`, sorted by feature name.
pub fn feature_effect(pcs: &PcMap) -> Vec<FeatureEffectEntry> {
    let features: Vec<(&String, &BTreeSet<Formula>)> = pcs.iter().collect();
    par::map(&features, |(feature, set)| FeatureEffectEntry {
        feature: (*feature).clone(),
        effect: effect_of(feature, set),
    })
}

/// Keeps entries whose feature is a model variable; identity without a model.
pub fn filter_relevant(entries: Vec<FeatureEffectEntry>, vm: Option<&VariabilityModel>) -> Vec<FeatureEffectEntry> {
    match vm {
        None => entries,
        Some(vm) => {
            let names: BTreeSet<&str> = vm.variables.iter().map(|(n, _)| n.as_str()).collect();
            entries.into_iter().filter(|e| names.contains(e.feature.as_str())).collect()
        }
    }
}

pub fn effects_table(entries: &[FeatureEffectEntry]) -> ResultTable {
    let mut table = ResultTable::new("FeatureEffectFinder", &["Feature", "FeatureEffect"]);
    for e in entries {
        table.push_row(vec![e.feature.clone().into(), e.effect.to_string().into()]);
    }
    table
}
