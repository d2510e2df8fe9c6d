//! DPLL satisfiability check with unit propagation and pure-literal
//! elimination.
//!
//! Decisions always pick the lowest-numbered unassigned variable that still
//! occurs in an open clause and try `true` first, so the model returned for
//! a given formula is fully deterministic.

use super::{to_cnf, Assignment, CnfFormula, Formula};

pub fn is_satisfiable(f: &Formula) -> bool {
    is_satisfiable_cnf(&to_cnf(f))
}

pub fn is_satisfiable_cnf(cnf: &CnfFormula) -> bool {
    solve_cnf(cnf).is_some()
}

/// A satisfying assignment over exactly the variables of `f`, if any.
pub fn solve(f: &Formula) -> Option<Assignment> {
    let cnf = to_cnf(f);
    let model = solve_cnf(&cnf)?;
    let mut assignment = Assignment::new();
    for name in f.variables() {
        // Variables removed by simplification do not matter; report them false.
        let value = cnf.id_of(&name).is_some_and(|id| model[id as usize]);
        assignment.set(name, value);
    }
    Some(assignment)
}

/// A model indexed by variable id (index 0 unused), if the CNF is satisfiable.
/// Variables left open by the search are reported `false`.
pub fn solve_cnf(cnf: &CnfFormula) -> Option<Vec<bool>> {
    let mut solver = Dpll::new(cnf);
    if solver.run() {
        Some(solver.values.iter().map(|&v| v > 0).collect())
    } else {
        None
    }
}

struct Decision {
    var: usize,
    trail_len: usize,
    flipped: bool,
}

struct Dpll<'a> {
    clauses: &'a [Vec<i32>],
    /// 1 = true, -1 = false, 0 = open; indexed by variable id.
    values: Vec<i8>,
    trail: Vec<usize>,
    decisions: Vec<Decision>,
}

enum Propagation {
    Conflict,
    Done,
}

impl<'a> Dpll<'a> {
    fn new(cnf: &'a CnfFormula) -> Self {
        Dpll {
            clauses: cnf.clauses(),
            values: vec![0; cnf.variable_count() + 1],
            trail: Vec::new(),
            decisions: Vec::new(),
        }
    }

    fn lit_value(&self, lit: i32) -> i8 {
        let v = self.values[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, lit: i32) {
        let var = lit.unsigned_abs() as usize;
        self.values[var] = if lit > 0 { 1 } else { -1 };
        self.trail.push(var);
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let var = self.trail.pop().unwrap();
            self.values[var] = 0;
        }
    }

    fn propagate(&mut self) -> Propagation {
        loop {
            let mut changed = false;
            for clause in self.clauses {
                let mut open = None;
                let mut open_count = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match self.lit_value(lit) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        0 => {
                            open_count += 1;
                            open = Some(lit);
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match open_count {
                    0 => return Propagation::Conflict,
                    1 => {
                        self.assign(open.unwrap());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Propagation::Done;
            }
        }
    }

    /// Assigns pure literals and returns the lowest open variable that still
    /// occurs in an unsatisfied clause.
    fn pure_literals_and_pick(&mut self) -> Option<usize> {
        // bit 0: occurs positively, bit 1: occurs negatively
        let mut polarity = vec![0u8; self.values.len()];
        for clause in self.clauses {
            if clause.iter().any(|&l| self.lit_value(l) == 1) {
                continue;
            }
            for &lit in clause {
                if self.lit_value(lit) == 0 {
                    polarity[lit.unsigned_abs() as usize] |= if lit > 0 { 1 } else { 2 };
                }
            }
        }
        let mut pick = None;
        for (var, &p) in polarity.iter().enumerate() {
            match p {
                1 => self.assign(var as i32),
                2 => self.assign(-(var as i32)),
                3 if pick.is_none() => pick = Some(var),
                _ => {}
            }
        }
        pick
    }

    fn run(&mut self) -> bool {
        loop {
            match self.propagate() {
                Propagation::Conflict => {
                    if !self.backtrack() {
                        return false;
                    }
                }
                Propagation::Done => match self.pure_literals_and_pick() {
                    None => return true,
                    Some(var) => {
                        self.decisions.push(Decision { var, trail_len: self.trail.len(), flipped: false });
                        self.assign(var as i32);
                    }
                },
            }
        }
    }

    fn backtrack(&mut self) -> bool {
        while let Some(decision) = self.decisions.pop() {
            self.undo_to(decision.trail_len);
            if !decision.flipped {
                self.decisions.push(Decision { flipped: true, ..decision });
                self.assign(-(decision.var as i32));
                return true;
            }
        }
        false
    }
}
