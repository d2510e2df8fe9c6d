//! Brute-force truth-table enumeration.
//!
//! These functions share no code with the CNF/DPLL path and serve as the
//! reference against which it is tested. They refuse to run above
//! [`MAX_ENUMERATION_VARS`] variables instead of switching strategy.

use std::collections::BTreeSet;

use super::{Assignment, Formula, FormulaError};

pub const MAX_ENUMERATION_VARS: usize = 24;

fn check_limit(count: usize) -> Result<(), FormulaError> {
    if count > MAX_ENUMERATION_VARS {
        Err(FormulaError::TooManyVariables { count, limit: MAX_ENUMERATION_VARS })
    } else {
        Ok(())
    }
}

/// All satisfying assignments over `vars`, in lexicographic order of the
/// variable list (`false` before `true`, first variable most significant).
pub fn enumerate_models(f: &Formula, vars: &[String]) -> Result<Vec<Assignment>, FormulaError> {
    check_limit(vars.len())?;
    let n = vars.len();
    let mut models = Vec::new();
    for bits in 0u32..(1u32 << n) {
        let assignment: Assignment =
            vars.iter().enumerate().map(|(i, name)| (name.clone(), bits >> (n - 1 - i) & 1 == 1)).collect();
        if f.evaluate(&assignment)? {
            models.push(assignment);
        }
    }
    Ok(models)
}

pub fn satisfiable_by_enumeration(f: &Formula) -> Result<bool, FormulaError> {
    let vars: Vec<String> = f.variables().into_iter().collect();
    Ok(!enumerate_models(f, &vars)?.is_empty())
}

/// Truth-table equivalence over the combined variables of `f` and `g`.
pub fn equivalent_by_enumeration(f: &Formula, g: &Formula) -> Result<bool, FormulaError> {
    let vars: BTreeSet<String> = f.variables().into_iter().chain(g.variables()).collect();
    let vars: Vec<String> = vars.into_iter().collect();
    check_limit(vars.len())?;
    let n = vars.len();
    for bits in 0u32..(1u32 << n) {
        let a: Assignment = vars.iter().enumerate().map(|(i, name)| (name.clone(), bits >> i & 1 == 1)).collect();
        if f.evaluate(&a)? != g.evaluate(&a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Formula {
        Formula::var(name)
    }

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_variable() {
        let models = enumerate_models(&v("A"), &names(&["A"])).unwrap();
        assert_eq!(models, vec![Assignment::new().with("A", true)]);
    }

    #[test]
    fn tautology_lists_all_rows_in_order() {
        let models = enumerate_models(&Formula::True, &names(&["A"])).unwrap();
        assert_eq!(models, vec![Assignment::new().with("A", false), Assignment::new().with("A", true)]);
    }

    #[test]
    fn four_row_truth_table() {
        let f = Formula::and2(Formula::or2(v("A"), v("B")), Formula::not(v("A")));
        let models = enumerate_models(&f, &names(&["A", "B"])).unwrap();
        assert_eq!(models, vec![Assignment::new().with("A", false).with("B", true)]);
    }

    #[test]
    fn lexicographic_order_follows_variable_list() {
        let models = enumerate_models(&Formula::True, &names(&["B", "A"])).unwrap();
        let rows: Vec<(bool, bool)> = models.iter().map(|m| (m.get("B").unwrap(), m.get("A").unwrap())).collect();
        assert_eq!(rows, vec![(false, false), (false, true), (true, false), (true, true)]);
    }

    #[test]
    fn limit_is_enforced() {
        let vars: Vec<String> = (0..25).map(|i| format!("V{i}")).collect();
        assert_eq!(
            enumerate_models(&Formula::True, &vars).unwrap_err(),
            FormulaError::TooManyVariables { count: 25, limit: 24 }
        );
    }

    #[test]
    fn missing_variable_is_an_error() {
        assert!(matches!(enumerate_models(&v("B"), &names(&["A"])), Err(FormulaError::UnassignedVariable(_))));
    }
}
