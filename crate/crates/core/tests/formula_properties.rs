use proptest::prelude::*;
use splwb_core::formula::{
    enumerate_models, equivalent, is_satisfiable, parse_formula, simplify, solve, to_cnf, Assignment, Formula,
};

fn var_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

fn formula_strategy(num_vars: usize) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::True),
        1 => Just(Formula::False),
        8 => (0..num_vars).prop_map(|i| Formula::var(format!("V{i}"))),
    ];
    leaf.prop_recursive(5, 40, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner, 2..4).prop_map(Formula::Or),
        ]
    })
}

/// Brute-force satisfiability of a CNF over all assignments of its ids.
fn cnf_sat_by_enumeration(clauses: &[Vec<i32>], vars: usize) -> bool {
    (0u64..(1 << vars)).any(|bits| {
        clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let value = bits >> (l.unsigned_abs() - 1) & 1 == 1;
                if l > 0 {
                    value
                } else {
                    !value
                }
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplify_preserves_models(f in formula_strategy(8)) {
        let vars = var_names(8);
        let s = simplify(&f);
        prop_assert_eq!(enumerate_models(&f, &vars).unwrap(), enumerate_models(&s, &vars).unwrap());
        prop_assert!(s.is_well_formed());
    }

    #[test]
    fn simplify_is_idempotent(f in formula_strategy(6)) {
        let s = simplify(&f);
        prop_assert_eq!(simplify(&s), s);
    }

    #[test]
    fn cnf_is_equisatisfiable(f in formula_strategy(6)) {
        let vars = var_names(6);
        let expected = !enumerate_models(&f, &vars).unwrap().is_empty();
        let cnf = to_cnf(&f);
        for clause in cnf.clauses() {
            prop_assert!(!clause.is_empty());
            prop_assert!(!clause.iter().any(|l| clause.contains(&-l)));
        }
        if cnf.variable_count() <= 20 {
            prop_assert_eq!(cnf_sat_by_enumeration(cnf.clauses(), cnf.variable_count()), expected);
        }
        prop_assert_eq!(is_satisfiable(&f), expected);
    }

    #[test]
    fn model_from_solver_satisfies_formula(f in formula_strategy(10)) {
        if let Some(model) = solve(&f) {
            prop_assert!(f.evaluate(&model).unwrap());
        } else {
            prop_assert!(enumerate_models(&f, &f.variables().into_iter().collect::<Vec<_>>()).unwrap().is_empty());
        }
    }

    #[test]
    fn substitute_agrees_with_evaluate(f in formula_strategy(5), bits in 0u32..32, var in 0usize..5) {
        let vars = var_names(5);
        let a: Assignment = vars.iter().enumerate().map(|(i, n)| (n.clone(), bits >> i & 1 == 1)).collect();
        let name = &vars[var];
        let substituted = f.substitute(name, a.get(name).unwrap());
        prop_assert_eq!(f.evaluate(&a).unwrap(), substituted.evaluate(&a).unwrap());
        prop_assert!(!substituted.mentions(name));
    }

    #[test]
    fn display_parse_round_trip(f in formula_strategy(5)) {
        prop_assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn constructors_keep_invariants(ops in prop::collection::vec(formula_strategy(4), 0..4)) {
        prop_assert!(Formula::and(ops.clone()).is_well_formed());
        prop_assert!(Formula::or(ops).is_well_formed());
    }

    #[test]
    fn equivalent_matches_simplify(f in formula_strategy(6)) {
        prop_assert!(equivalent(&f, &simplify(&f)));
    }
}
