use std::collections::BTreeSet;

use proptest::prelude::*;
use rc_core::formula::{parse_clause, AnnotatedClause, Role};
use rc_core::graph::{build_graph, size_window, DerivationGraph, NodeId};
use rc_core::pipeline::{build_domain, PipelineConfig};
use rc_core::prover::{
    saturate_internal, DerivationRecord, EntailmentOracle, InternalOracle, ProverLimits, SaturationOutput,
};

/// Node `i` draws its parents from nodes before it; an empty draw makes it
/// an axiom.
fn random_log(parent_sets: &[Vec<usize>]) -> SaturationOutput {
    let records = parent_sets
        .iter()
        .enumerate()
        .map(|(i, ps)| {
            let parents: BTreeSet<usize> = if i == 0 { BTreeSet::new() } else { ps.iter().map(|p| p % i).collect() };
            DerivationRecord {
                name: format!("n{i}"),
                role: if parents.is_empty() { Role::Axiom } else { Role::Derived },
                clause: parse_clause(&format!("(c{i}(a))")).unwrap(),
                parents: parents.iter().map(|p| format!("n{p}")).collect(),
                rule: "resolution".into(),
            }
        })
        .collect();
    SaturationOutput { records, complete: true }
}

fn dag() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..64usize, 0..3), 1..14)
}

/// Every path from `v` up to an axiom, as node lists starting at `v`.
fn paths(g: &DerivationGraph, v: NodeId) -> Vec<Vec<NodeId>> {
    if g.parents(v).is_empty() {
        return vec![vec![v]];
    }
    g.parents(v)
        .iter()
        .flat_map(|&p| paths(g, p))
        .map(|mut p| {
            p.insert(0, v);
            p
        })
        .collect()
}

proptest! {
    #[test]
    fn random_dags_match_brute_force(sets in dag()) {
        let g = build_graph(&random_log(&sets)).unwrap();
        let topo = g.topological_order();
        let pos = |v: NodeId| topo.iter().position(|&x| x == v).unwrap();
        for v in 0..g.len() {
            for &p in g.parents(v) {
                prop_assert!(pos(p) < pos(v));
            }
            let ps = paths(&g, v);
            let longest = ps.iter().map(|p| p.len() - 1).max().unwrap();
            prop_assert_eq!(g.node_depth(v).unwrap(), longest);
            let on_paths: BTreeSet<NodeId> = ps.iter().flat_map(|p| p[1..].iter().copied()).collect();
            prop_assert_eq!(g.ancestors(v).unwrap(), on_paths);
            if g.is_root(v) {
                continue;
            }
            prop_assert!(g.node_depth(v).unwrap() >= 1);
            for d in 1..=4 {
                let cut = g.premises_at_depth(v, d).unwrap();
                prop_assert!(cut.premises.is_subset(&g.ancestors(v).unwrap()));
                for p in &ps {
                    // the node d steps up, or the axiom the path stops at
                    let stop = p[d.min(p.len() - 1)];
                    prop_assert!(cut.premises.contains(&stop));
                }
                if let Some(sub) = g.binary_proof_subgraph(v, d).unwrap() {
                    let inner = sub.nodes.iter().filter(|&&n| !g.is_root(n)).count();
                    prop_assert_eq!(sub.edges.len(), 2 * inner);
                    let (lo, hi) = size_window(d);
                    prop_assert!((lo..=hi).contains(&sub.nodes.len()));
                }
            }
        }
    }

    #[test]
    fn tree_frontiers_cut_each_path_once(picks in prop::collection::vec(0..16usize, 1..8)) {
        // a binary tree grown by splitting a chosen open leaf
        let mut sets: Vec<Vec<usize>> = vec![vec![]];
        let mut open = vec![0usize];
        for &pick in &picks {
            let leaf = open.remove(pick % open.len());
            let a = sets.len();
            sets.push(vec![]);
            let b = sets.len();
            sets.push(vec![]);
            sets[leaf] = vec![a, b];
            open.extend([a, b]);
        }
        // reverse so parents come first in the log
        let n = sets.len();
        let records = (0..n)
            .rev()
            .map(|i| DerivationRecord {
                name: format!("n{i}"),
                role: if sets[i].is_empty() { Role::Axiom } else { Role::Derived },
                clause: parse_clause(&format!("(c{i}(a))")).unwrap(),
                parents: sets[i].iter().map(|p| format!("n{p}")).collect(),
                rule: "resolution".into(),
            })
            .collect();
        let g = build_graph(&SaturationOutput { records, complete: true }).unwrap();
        let root = g.id("n0").unwrap();
        for d in 1..=4 {
            let cut = g.premises_at_depth(root, d).unwrap();
            for p in paths(&g, root) {
                prop_assert_eq!(p.iter().filter(|v| cut.premises.contains(v)).count(), 1);
            }
        }
    }

    #[test]
    fn saturation_graphs_are_acyclic(picks in prop::collection::vec(0..8usize, 1..5)) {
        let pool = [
            "(p(a))",
            "(~p(X1)|p(f(X1)))",
            "(q(X1,X2)|~p(X1)|~p(X2))",
            "(~q(X1,X1)|r(X1))",
            "(~r(f(X1))|s(X1))",
            "(~s(X1)|~p(X1))",
            "(p(X1)|r(X1))",
            "(q(f(X1),X2)|~r(X2))",
        ];
        let axioms: Vec<AnnotatedClause> = picks
            .iter()
            .enumerate()
            .map(|(i, &k)| AnnotatedClause::new(format!("ax{i}"), Role::Axiom, parse_clause(pool[k]).unwrap()))
            .collect();
        let limits = ProverLimits { max_clauses: 200, max_weight: 10, ..ProverLimits::default() };
        let out = saturate_internal(&axioms, limits);
        let g = build_graph(&out).unwrap();
        prop_assert_eq!(g.topological_order().len(), g.len());
        for v in g.derived() {
            prop_assert!(!g.ancestors(v).unwrap().contains(&v));
        }
    }
}

#[test]
fn frontiers_of_bundled_domains_entail_their_targets() {
    let cfg = PipelineConfig::default();
    let oracle = InternalOracle::new(ProverLimits::default());
    let mut sampled = 0;
    let mut entailed = 0;
    for domain in &cfg.domains {
        let dg = build_domain(&cfg, domain).unwrap();
        for &t in dg.ranked.iter().step_by(17).take(12) {
            for d in 1..=3 {
                let cut = dg.graph.premises_at_depth(t, d).unwrap();
                let premises: Vec<_> = cut.premises.iter().map(|&p| dg.graph.clause(p).clause.clone()).collect();
                sampled += 1;
                entailed += oracle.check(&premises, &dg.graph.clause(t).clause).unwrap().is_entailed() as usize;
            }
        }
    }
    assert!(sampled >= 100, "{sampled}");
    assert!(entailed as f64 >= 0.95 * sampled as f64, "{entailed} of {sampled}");
}
