use serde::{Deserialize, Serialize};

use super::{FeatureEffectEntry, ResultTable};
use crate::formula::{solve, Assignment, Formula};
use crate::models::VariabilityModel;
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub feature: String,
    pub effect: Formula,
    /// A model of `vm ∧ feature ∧ ¬effect` over that formula's variables.
    pub witness: Assignment,
}

/// Features the model allows selecting where their selection has no effect.
pub fn configuration_mismatches(fes: &[FeatureEffectEntry], vm: &VariabilityModel) -> Vec<Mismatch> {
    let found = par::map(fes, |entry| {
        let tested = Formula::and([
            vm.constraint.clone(),
            Formula::var(entry.feature.clone()),
            Formula::not(entry.effect.clone()),
        ]);
        solve(&tested).map(|witness| Mismatch { feature: entry.feature.clone(), effect: entry.effect.clone(), witness })
    });
    let mut out: Vec<Mismatch> = found.into_iter().flatten().collect();
    out.sort_by(|a, b| a.feature.cmp(&b.feature));
    out
}

pub fn mismatches_table(mismatches: &[Mismatch]) -> ResultTable {
    let mut table = ResultTable::new("ConfigurationMismatches", &["Feature", "FeatureEffect", "Witness"]);
    for m in mismatches {
        table.push_row(vec![m.feature.clone().into(), m.effect.to_string().into(), m.witness.to_string().into()]);
    }
    table
}
