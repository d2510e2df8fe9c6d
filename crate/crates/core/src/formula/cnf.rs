use std::collections::HashMap;

use super::{simplify, Formula};

/// A formula in conjunctive normal form with integer literals.
///
/// Variables `1..=original_count` are the named variables of the source
/// formula; ids above that are auxiliary variables introduced by the
/// Tseitin encoding. No clause is empty and no clause contains a literal
/// together with its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    names: Vec<String>,
    aux_count: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    /// Builds a CNF from explicit clauses over named variables (`names[i]`
    /// has id `i + 1`). Tautological clauses are dropped and duplicate
    /// literals merged; an empty clause makes the whole set unsatisfiable
    /// and is encoded through one auxiliary variable.
    ///
    /// Panics if a literal is zero or refers to an id above `names.len()`.
    pub fn from_clauses(names: Vec<String>, clauses: impl IntoIterator<Item = Vec<i32>>) -> CnfFormula {
        let mut builder = Builder::new(names);
        let n = builder.names.len() as i32;
        for clause in clauses {
            assert!(clause.iter().all(|&l| l != 0 && l.abs() <= n), "literal out of range");
            if clause.is_empty() {
                builder.add_contradiction();
            } else {
                builder.add_clause(clause);
            }
        }
        builder.finish()
    }

    pub fn original_count(&self) -> usize {
        self.names.len()
    }

    pub fn aux_count(&self) -> usize {
        self.aux_count
    }

    pub fn variable_count(&self) -> usize {
        self.names.len() + self.aux_count
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id_of(&self, name: &str) -> Option<i32> {
        self.names.iter().position(|n| n == name).map(|i| i as i32 + 1)
    }

    /// Name of a non-auxiliary variable.
    pub fn name_of(&self, id: i32) -> Option<&str> {
        let idx = usize::try_from(id).ok()?.checked_sub(1)?;
        self.names.get(idx).map(String::as_str)
    }

    /// DIMACS text with `c <id> <name>` lines for the named variables.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(&format!("c {} {}\n", i + 1, name));
        }
        out.push_str(&format!("p cnf {} {}\n", self.variable_count(), self.clauses.len()));
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Tseitin transformation.
///
/// The result is equisatisfiable with `f`; every model of the CNF restricted
/// to the named variables is a model of `f`. Top-level conjuncts that are
/// already clauses are emitted without auxiliary variables.
pub fn to_cnf(f: &Formula) -> CnfFormula {
    let simplified = simplify(f);
    let mut builder = Builder::new(simplified.variables_ordered());
    let conjuncts = match &simplified {
        Formula::And(ops) => ops.as_slice(),
        other => std::slice::from_ref(other),
    };
    for conjunct in conjuncts {
        match conjunct {
            Formula::True => {}
            Formula::False => builder.add_contradiction(),
            c => match builder.as_clause(c) {
                Some(clause) => builder.add_clause(clause),
                None => {
                    let lit = builder.encode(c);
                    builder.add_clause(vec![lit]);
                }
            },
        }
    }
    builder.finish()
}

struct Builder {
    names: Vec<String>,
    ids: HashMap<String, i32>,
    aux_count: usize,
    clauses: Vec<Vec<i32>>,
}

impl Builder {
    fn new(names: Vec<String>) -> Self {
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i as i32 + 1)).collect();
        Builder { names, ids, aux_count: 0, clauses: Vec::new() }
    }

    fn fresh(&mut self) -> i32 {
        self.aux_count += 1;
        (self.names.len() + self.aux_count) as i32
    }

    fn add_clause(&mut self, mut clause: Vec<i32>) {
        clause.sort_by_key(|l| (l.abs(), *l < 0));
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == -w[1]) {
            return;
        }
        self.clauses.push(clause);
    }

    fn add_contradiction(&mut self) {
        let x = self.fresh();
        self.clauses.push(vec![x]);
        self.clauses.push(vec![-x]);
    }

    fn literal(&self, f: &Formula) -> Option<i32> {
        match f {
            Formula::Var(v) => Some(self.ids[v]),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Var(v) => Some(-self.ids[v]),
                _ => None,
            },
            _ => None,
        }
    }

    fn as_clause(&self, f: &Formula) -> Option<Vec<i32>> {
        match f {
            Formula::Or(ops) => ops.iter().map(|op| self.literal(op)).collect(),
            other => self.literal(other).map(|l| vec![l]),
        }
    }

    fn encode(&mut self, f: &Formula) -> i32 {
        match f {
            Formula::Var(v) => self.ids[v],
            Formula::Not(inner) => -self.encode(inner),
            Formula::And(ops) => {
                let lits: Vec<i32> = ops.iter().map(|op| self.encode(op)).collect();
                let x = self.fresh();
                for &l in &lits {
                    self.add_clause(vec![-x, l]);
                }
                let mut long = vec![x];
                long.extend(lits.iter().map(|l| -l));
                self.add_clause(long);
                x
            }
            Formula::Or(ops) => {
                let lits: Vec<i32> = ops.iter().map(|op| self.encode(op)).collect();
                let x = self.fresh();
                for &l in &lits {
                    self.add_clause(vec![x, -l]);
                }
                let mut long = vec![-x];
                long.extend(lits.iter().copied());
                self.add_clause(long);
                x
            }
            // Constants only survive simplification at the root, which
            // `to_cnf` handles; encode them through a forced auxiliary anyway.
            Formula::True | Formula::False => {
                let x = self.fresh();
                let unit = if f.is_true() { x } else { -x };
                self.clauses.push(vec![unit]);
                x
            }
        }
    }

    fn finish(self) -> CnfFormula {
        CnfFormula { names: self.names, aux_count: self.aux_count, clauses: self.clauses }
    }
}
