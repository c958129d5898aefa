use std::time::Duration;

use proptest::prelude::*;
use rc_core::formula::{Clause, Literal, Term};
use rc_core::prover::{negate_conjecture, prove_internal, ProverLimits};
use rc_refute::{refute, Options, Status};

const ATOMS: [&str; 4] = ["p", "q", "r", "s"];

fn prop_clause() -> impl Strategy<Value = Clause> {
    prop::collection::vec((0..4usize, any::<bool>()), 1..4).prop_map(|lits| {
        Clause::new(lits.into_iter().map(|(a, pos)| Literal::new(pos, ATOMS[a], vec![])).collect())
    })
}

fn satisfiable(clauses: &[Clause]) -> bool {
    (0..16u32).any(|v| {
        clauses.iter().all(|c| {
            c.literals.iter().any(|l| {
                let i = ATOMS.iter().position(|a| *a == l.predicate).unwrap();
                (v >> i & 1 == 1) == l.positive
            })
        })
    })
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (1..3u8).prop_map(|i| Term::var(format!("X{i}"))),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(2, 4, 1, |inner| inner.prop_map(|t| Term::app("f", vec![t])))
}

fn fo_clause() -> impl Strategy<Value = Clause> {
    let lit = prop_oneof![
        (any::<bool>(), term()).prop_map(|(pos, t)| Literal::new(pos, "p", vec![t])),
        (any::<bool>(), term(), term()).prop_map(|(pos, s, t)| Literal::new(pos, "q", vec![s, t])),
    ];
    prop::collection::vec(lit, 1..3).prop_map(Clause::new)
}

fn quick() -> Options {
    Options { timeout: Duration::from_secs(2), ..Options::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn propositional_status_matches_truth_tables(clauses in prop::collection::vec(prop_clause(), 1..8)) {
        let want = if satisfiable(&clauses) { Status::Satisfiable } else { Status::Unsatisfiable };
        prop_assert_eq!(refute(&clauses, &[], quick()), want);
        let last = clauses.len() - 1;
        prop_assert_eq!(refute(&clauses, &[last], quick()), want);
    }

    #[test]
    fn never_contradicts_the_saturating_prover(
        premises in prop::collection::vec(fo_clause(), 1..5),
        goal in fo_clause().prop_filter("ground", Clause::is_ground),
    ) {
        let mut problem = premises.clone();
        let negated = negate_conjecture(&goal, &premises);
        let goals: Vec<usize> = (problem.len()..problem.len() + negated.len()).collect();
        problem.extend(negated);
        let v = prove_internal(&premises, &goal, ProverLimits { max_clauses: 3000, ..ProverLimits::default() });
        match refute(&problem, &goals, quick()) {
            Status::Unsatisfiable => prop_assert!(!v.is_not_entailed(), "{:?}", v),
            Status::Satisfiable => prop_assert!(!v.is_entailed(), "{:?}", v),
            Status::GaveUp => {}
        }
    }
}
