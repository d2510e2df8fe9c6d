use std::collections::HashSet;

use super::Formula;

/// Local simplification.
///
/// Rules, applied bottom-up: constant folding, double-negation removal,
/// flattening of nested `And`/`Or` of the same kind, removal of neutral
/// constants, collapse to the absorbing constant, removal of duplicate
/// operands (first occurrence wins) and collapse of `x` next to `!x`.
/// Operand order is otherwise preserved.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Var(_) => f.clone(),
        Formula::Not(inner) => match simplify(inner) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(x) => *x,
            other => Formula::not(other),
        },
        Formula::And(ops) => simplify_junction(ops, true),
        Formula::Or(ops) => simplify_junction(ops, false),
    }
}

fn simplify_junction(ops: &[Formula], is_and: bool) -> Formula {
    // For `And` the neutral element is `True` and the absorbing one `False`;
    // `Or` is the dual.
    let neutral = Formula::constant(is_and);
    let absorbing = Formula::constant(!is_and);

    let mut flat: Vec<Formula> = Vec::with_capacity(ops.len());
    for op in ops {
        let s = simplify(op);
        match s {
            Formula::And(inner) if is_and => flat.extend(inner),
            Formula::Or(inner) if !is_and => flat.extend(inner),
            other => flat.push(other),
        }
    }

    let mut seen: HashSet<Formula> = HashSet::with_capacity(flat.len());
    let mut kept = Vec::with_capacity(flat.len());
    for op in flat {
        if op == absorbing {
            return absorbing;
        }
        if op == neutral || seen.contains(&op) {
            continue;
        }
        seen.insert(op.clone());
        kept.push(op);
    }

    let has_complement = kept.iter().any(|op| match op {
        Formula::Not(inner) => seen.contains(inner.as_ref()),
        _ => false,
    });
    if has_complement {
        return absorbing;
    }

    if is_and {
        Formula::and(kept)
    } else {
        Formula::or(kept)
    }
}
