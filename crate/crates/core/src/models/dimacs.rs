//! DIMACS CNF variability models.
//!
//! Variable names come from `c <id> <name>` comment lines; ids without such
//! a line are named `VAR_<id>`. The clause count in the header is only
//! checked with a warning.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::VariabilityModel;
use crate::formula::Formula;
use crate::Warning;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {line}: malformed or missing `p cnf` header")]
    MalformedHeader { line: usize },
    #[error("line {line}: literal {literal} out of range")]
    LiteralOutOfRange { line: usize, literal: i64 },
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("last clause is not terminated by 0")]
    MissingTerminator,
    #[error("line {line}: variable name `{name}` is used twice")]
    DuplicateName { line: usize, name: String },
}

/// Parses a DIMACS document; `source_path` is recorded in the model.
pub fn parse_dimacs(text: &str, source_path: &str) -> Result<(VariabilityModel, Vec<Warning>), DimacsError> {
    let mut warnings = Vec::new();
    let mut names: BTreeMap<i64, (String, usize)> = BTreeMap::new();
    let mut header: Option<(i64, usize)> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut current: Vec<i64> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "%" {
            break;
        }
        if let Some(comment) = line.strip_prefix('c') {
            if comment.is_empty() || comment.starts_with(char::is_whitespace) {
                let tokens: Vec<&str> = comment.split_whitespace().collect();
                if let [id, name] = tokens.as_slice() {
                    if let Ok(id) = id.parse::<i64>() {
                        if names.values().any(|(n, _)| n == name) {
                            return Err(DimacsError::DuplicateName { line: line_no, name: name.to_string() });
                        }
                        names.insert(id, (name.to_string(), line_no));
                    }
                }
                continue;
            }
        }
        if let Some(rest) = line.strip_prefix('p') {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            let parsed = match tokens.as_slice() {
                ["cnf", vars, count] if header.is_none() => vars.parse::<i64>().ok().zip(count.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((vars, count)) if vars >= 0 => header = Some((vars, count)),
                _ => return Err(DimacsError::MalformedHeader { line: line_no }),
            }
            continue;
        }
        let Some((var_count, _)) = header else {
            return Err(DimacsError::MalformedHeader { line: line_no });
        };
        for token in line.split_whitespace() {
            let literal: i64 =
                token.parse().map_err(|_| DimacsError::InvalidToken { line: line_no, token: token.to_string() })?;
            if literal == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if literal.abs() > var_count {
                return Err(DimacsError::LiteralOutOfRange { line: line_no, literal });
            } else {
                current.push(literal);
            }
        }
    }

    let Some((var_count, declared_clauses)) = header else {
        return Err(DimacsError::MalformedHeader { line: text.lines().count() + 1 });
    };
    if !current.is_empty() {
        return Err(DimacsError::MissingTerminator);
    }
    if let Some((&id, &(_, line))) = names.iter().find(|(&id, _)| id < 1 || id > var_count) {
        return Err(DimacsError::LiteralOutOfRange { line, literal: id });
    }
    if declared_clauses != clauses.len() {
        warnings.push(Warning::new(
            source_path,
            format!("header declares {declared_clauses} clauses, found {}", clauses.len()),
        ));
    }

    let mut variables = Vec::with_capacity(var_count as usize);
    let mut used: HashSet<String> = names.values().map(|(n, _)| n.clone()).collect();
    for id in 1..=var_count {
        let name = match names.get(&id) {
            Some((name, _)) => name.clone(),
            None => {
                let synthetic = format!("VAR_{id}");
                if !used.insert(synthetic.clone()) {
                    return Err(DimacsError::DuplicateName { line: 0, name: synthetic });
                }
                synthetic
            }
        };
        variables.push((name, id as u32));
    }
    for (name, _) in &variables {
        if !crate::formula::is_valid_variable_name(name) {
            return Err(DimacsError::InvalidToken { line: 0, token: name.clone() });
        }
    }

    let name_of = |lit: i64| variables[(lit.unsigned_abs() - 1) as usize].0.clone();
    let constraint = Formula::and(clauses.iter().map(|clause| {
        Formula::or(clause.iter().map(|&lit| {
            let var = Formula::var(name_of(lit));
            if lit > 0 {
                var
            } else {
                Formula::not(var)
            }
        }))
    }));

    Ok((VariabilityModel { variables, constraint, source_path: source_path.to_string() }, warnings))
}

/// Clauses of a clause-shaped constraint as signed literals.
/// Returns `None` when the constraint is not a conjunction of clauses.
pub fn constraint_clauses(vm: &VariabilityModel) -> Option<Vec<Vec<i64>>> {
    let ids: std::collections::HashMap<&str, i64> =
        vm.variables.iter().map(|(n, id)| (n.as_str(), i64::from(*id))).collect();
    let literal = |f: &Formula| -> Option<i64> {
        match f {
            Formula::Var(v) => ids.get(v.as_str()).copied(),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Var(v) => ids.get(v.as_str()).map(|id| -id),
                _ => None,
            },
            _ => None,
        }
    };
    let clause = |f: &Formula| -> Option<Vec<i64>> {
        match f {
            Formula::False => Some(Vec::new()),
            Formula::Or(ops) => ops.iter().map(literal).collect(),
            other => literal(other).map(|l| vec![l]),
        }
    };
    match &vm.constraint {
        Formula::True => Some(Vec::new()),
        Formula::And(ops) => ops.iter().map(clause).collect(),
        other => clause(other).map(|c| vec![c]),
    }
}

/// Serializes a clause-shaped model back to DIMACS (with name comments).
/// Returns `None` when the constraint is not a conjunction of clauses.
pub fn write_dimacs(vm: &VariabilityModel) -> Option<String> {
    let clauses = constraint_clauses(vm)?;
    let mut out = String::new();
    for (name, id) in &vm.variables {
        out.push_str(&format!("c {id} {name}\n"));
    }
    let var_count = vm.variables.iter().map(|(_, id)| *id).max().unwrap_or(0);
    out.push_str(&format!("p cnf {var_count} {}\n", clauses.len()));
    for clause in clauses {
        for lit in clause {
            out.push_str(&format!("{lit} "));
        }
        out.push_str("0\n");
    }
    Some(out)
}
