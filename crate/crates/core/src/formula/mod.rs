//! Propositional formulas over named variability variables.
//!
//! [`Formula`] is the common currency of every extractor and analysis: block
//! conditions, presence conditions, build conditions and variability-model
//! constraints are all plain formulas. Values are immutable; the `and`/`or`
//! constructors enforce the operand-count normalizations so that a
//! conjunction or disjunction always has at least two operands.

mod cnf;
mod oracle;
mod sat;
mod simplify;
mod syntax;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cnf::{to_cnf, CnfFormula};
pub use oracle::{enumerate_models, equivalent_by_enumeration, satisfiable_by_enumeration, MAX_ENUMERATION_VARS};
pub use sat::{is_satisfiable, is_satisfiable_cnf, solve, solve_cnf};
pub use simplify::simplify;
pub use syntax::parse_formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("variable `{0}` is not assigned")]
    UnassignedVariable(String),
    #[error("too many variables for enumeration: {count} (limit {limit})")]
    TooManyVariables { count: usize, limit: usize },
    #[error("invalid variable name `{0}`")]
    InvalidVariableName(String),
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
}

/// A propositional formula.
///
/// Do not build `And`/`Or` directly; use [`Formula::and`] and [`Formula::or`],
/// which collapse empty and unary operand lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Var(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

/// Returns whether `name` is usable as a variable name.
pub fn is_valid_variable_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

impl Formula {
    /// Creates a variable.
    ///
    /// Panics if `name` is empty or contains whitespace; use
    /// [`Formula::try_var`] for untrusted input.
    pub fn var(name: impl Into<String>) -> Formula {
        let name = name.into();
        assert!(is_valid_variable_name(&name), "invalid variable name {name:?}");
        Formula::Var(name)
    }

    pub fn try_var(name: impl Into<String>) -> Result<Formula, FormulaError> {
        let name = name.into();
        if is_valid_variable_name(&name) {
            Ok(Formula::Var(name))
        } else {
            Err(FormulaError::InvalidVariableName(name))
        }
    }

    pub fn constant(value: bool) -> Formula {
        if value {
            Formula::True
        } else {
            Formula::False
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(operand: Formula) -> Formula {
        Formula::Not(Box::new(operand))
    }

    /// Conjunction: no operands give `True`, a single operand is returned as is.
    pub fn and<I: IntoIterator<Item = Formula>>(operands: I) -> Formula {
        let mut ops: Vec<Formula> = operands.into_iter().collect();
        match ops.len() {
            0 => Formula::True,
            1 => ops.pop().unwrap(),
            _ => Formula::And(ops),
        }
    }

    /// Disjunction: no operands give `False`, a single operand is returned as is.
    pub fn or<I: IntoIterator<Item = Formula>>(operands: I) -> Formula {
        let mut ops: Vec<Formula> = operands.into_iter().collect();
        match ops.len() {
            0 => Formula::False,
            1 => ops.pop().unwrap(),
            _ => Formula::Or(ops),
        }
    }

    pub fn and2(a: Formula, b: Formula) -> Formula {
        Formula::And(vec![a, b])
    }

    pub fn or2(a: Formula, b: Formula) -> Formula {
        Formula::Or(vec![a, b])
    }

    /// `(x && !y) || (!x && y)`
    pub fn xor(x: Formula, y: Formula) -> Formula {
        Formula::or2(Formula::and2(x.clone(), Formula::not(y.clone())), Formula::and2(Formula::not(x), y))
    }

    pub fn implies(premise: Formula, conclusion: Formula) -> Formula {
        Formula::or2(Formula::not(premise), conclusion)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Variables in order of first occurrence (depth-first, left to right).
    pub fn variables_ordered(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.visit_vars(&mut |name| {
            if seen.insert(name.to_string()) {
                out.push(name.to_string());
            }
        });
        out
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |name| {
            out.insert(name.to_string());
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Var(v) => v == name,
            Formula::Not(inner) => inner.mentions(name),
            Formula::And(ops) | Formula::Or(ops) => ops.iter().any(|op| op.mentions(name)),
        }
    }

    fn visit_vars<F: FnMut(&str)>(&self, visit: &mut F) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Var(v) => visit(v),
            Formula::Not(inner) => inner.visit_vars(visit),
            Formula::And(ops) | Formula::Or(ops) => ops.iter().for_each(|op| op.visit_vars(visit)),
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Var(_) => 1,
            Formula::Not(inner) => 1 + inner.size(),
            Formula::And(ops) | Formula::Or(ops) => 1 + ops.iter().map(Formula::size).sum::<usize>(),
        }
    }

    /// Checks the operand-count and variable-name invariants on the whole tree.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Formula::True | Formula::False => true,
            Formula::Var(v) => is_valid_variable_name(v),
            Formula::Not(inner) => inner.is_well_formed(),
            Formula::And(ops) | Formula::Or(ops) => ops.len() >= 2 && ops.iter().all(Formula::is_well_formed),
        }
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(v) => assignment.get(v).ok_or_else(|| FormulaError::UnassignedVariable(v.clone()))?,
            Formula::Not(inner) => !inner.evaluate(assignment)?,
            Formula::And(ops) => {
                // Evaluate every operand so that partial assignments are
                // always reported, not only when short-circuiting misses them.
                let mut result = true;
                for op in ops {
                    result &= op.evaluate(assignment)?;
                }
                result
            }
            Formula::Or(ops) => {
                let mut result = false;
                for op in ops {
                    result |= op.evaluate(assignment)?;
                }
                result
            }
        })
    }

    /// Replaces `Var(name)` with a constant and constant-folds the result.
    pub fn substitute(&self, name: &str, value: bool) -> Formula {
        simplify(&self.replace_var(name, value))
    }

    fn replace_var(&self, name: &str, value: bool) -> Formula {
        match self {
            Formula::Var(v) if v == name => Formula::constant(value),
            Formula::True | Formula::False | Formula::Var(_) => self.clone(),
            Formula::Not(inner) => Formula::not(inner.replace_var(name, value)),
            Formula::And(ops) => Formula::And(ops.iter().map(|op| op.replace_var(name, value)).collect()),
            Formula::Or(ops) => Formula::Or(ops.iter().map(|op| op.replace_var(name, value)).collect()),
        }
    }
}

/// Free function form of [`Formula::evaluate`].
pub fn evaluate(f: &Formula, assignment: &Assignment) -> Result<bool, FormulaError> {
    f.evaluate(assignment)
}

/// Free function form of [`Formula::substitute`].
pub fn substitute(f: &Formula, name: &str, value: bool) -> Formula {
    f.substitute(name, value)
}

/// Semantic equivalence, decided as unsatisfiability of `f xor g`.
pub fn equivalent(f: &Formula, g: &Formula) -> bool {
    !is_satisfiable(&Formula::xor(f.clone(), g.clone()))
}

/// Whether every model of `f` is a model of `g`.
pub fn implies(f: &Formula, g: &Formula) -> bool {
    !is_satisfiable(&Formula::and2(f.clone(), Formula::not(g.clone())))
}

/// A (partial or total) truth assignment, ordered by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: bool) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: bool) -> Self {
        self.set(name, value);
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Keeps only the given variables.
    pub fn restricted_to<'a, I: IntoIterator<Item = &'a String>>(&self, names: I) -> Assignment {
        let keep: BTreeSet<&String> = names.into_iter().collect();
        Assignment(self.0.iter().filter(|(k, _)| keep.contains(k)).map(|(k, v)| (k.clone(), *v)).collect())
    }
}

impl<S: Into<String>> FromIterator<(S, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (S, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, value) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}={}", name, u8::from(*value))?;
        }
        Ok(())
    }
}

// Surface syntax: `!`, `&&`, `||`, parentheses, `true`, `false`. A nested
// operand with the same connective as its parent is parenthesized so that
// printing and reparsing reproduces the tree exactly.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Var(v) => f.write_str(v),
            Formula::Not(inner) => match **inner {
                Formula::And(_) | Formula::Or(_) => write!(f, "!({inner})"),
                _ => write!(f, "!{inner}"),
            },
            Formula::And(ops) => write_joined(f, ops, " && ", |op| matches!(op, Formula::And(_) | Formula::Or(_))),
            Formula::Or(ops) => write_joined(f, ops, " || ", |op| matches!(op, Formula::Or(_))),
        }
    }
}

fn write_joined(
    f: &mut fmt::Formatter<'_>,
    ops: &[Formula],
    sep: &str,
    needs_parens: impl Fn(&Formula) -> bool,
) -> fmt::Result {
    for (i, op) in ops.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        if needs_parens(op) {
            write!(f, "({op})")?;
        } else {
            write!(f, "{op}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Formula {
        Formula::var(name)
    }

    #[test]
    fn constructors_normalize_operand_counts() {
        assert_eq!(Formula::and(vec![]), Formula::True);
        assert_eq!(Formula::or(vec![]), Formula::False);
        assert_eq!(Formula::and(vec![v("A")]), v("A"));
        assert_eq!(Formula::or(vec![v("A")]), v("A"));
        assert!(Formula::and(vec![v("A"), v("B")]).is_well_formed());
    }

    #[test]
    fn invalid_names_are_rejected() {
        assert!(Formula::try_var("").is_err());
        assert!(Formula::try_var("A B").is_err());
        assert!(Formula::try_var("CONFIG_A").is_ok());
    }

    #[test]
    fn evaluate_examples() {
        let a = Assignment::new().with("A", true);
        assert!(!Formula::and2(v("A"), Formula::not(v("A"))).evaluate(&a).unwrap());
        assert!(Formula::True.evaluate(&Assignment::new()).unwrap());
        let ab = Assignment::new().with("A", false).with("B", true);
        assert!(Formula::or2(v("A"), v("B")).evaluate(&ab).unwrap());
    }

    #[test]
    fn evaluate_reports_partial_assignment() {
        let a = Assignment::new().with("A", false);
        let err = Formula::and2(v("A"), v("B")).evaluate(&a).unwrap_err();
        assert_eq!(err, FormulaError::UnassignedVariable("B".into()));
    }

    #[test]
    fn substitute_examples() {
        assert_eq!(Formula::and2(v("A"), v("B")).substitute("A", true), v("B"));
        assert_eq!(v("A").substitute("A", false), Formula::False);
        let or = Formula::or2(v("A"), v("B"));
        assert_eq!(or.substitute("C", true), or);
    }

    #[test]
    fn equivalence_examples() {
        assert!(equivalent(&Formula::not(Formula::not(v("A"))), &v("A")));
        assert!(equivalent(&Formula::and2(v("A"), v("B")), &Formula::and2(v("B"), v("A"))));
        assert!(!equivalent(&v("A"), &v("B")));
    }

    #[test]
    fn display_nests_same_connective() {
        let f = Formula::and2(Formula::and2(v("A"), v("B")), Formula::or2(v("C"), Formula::not(v("D"))));
        assert_eq!(f.to_string(), "(A && B) && (C || !D)");
        assert_eq!(Formula::not(Formula::or2(v("A"), v("B"))).to_string(), "!(A || B)");
    }

    #[test]
    fn variables_in_first_occurrence_order() {
        let f = Formula::or2(Formula::and2(v("B"), v("A")), v("B"));
        assert_eq!(f.variables_ordered(), vec!["B".to_string(), "A".to_string()]);
    }
}
