#![cfg(unix)]

use std::collections::BTreeSet;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rc_core::formula::{parse_clause, AnnotatedClause, Role};
use rc_core::graph::build_graph;
use rc_core::prover::{
    run_external_saturation, saturate_internal, EntailmentOracle, ExternalOracle, ExternalProverConfig, Limit,
    ProverLimits, SaturationOutput, Verdict,
};

const AXIOMS: [&str; 3] = ["(p(a))", "(~p(X1)|q(X1))", "(~q(X1)|r(X1))"];

/// The saturation of the three axioms, worked out by hand.
const TSTP: &str = "\
# SZS status Satisfiable
cnf(i_0_1, axiom, (p(a)), file('toy.p', a1)).
cnf(i_0_2, axiom, (~p(X1)|q(X1)), file('toy.p', a2)).
cnf(i_0_3, axiom, (~q(X1)|r(X1)), file('toy.p', a3)).
cnf(c_0_4, plain, (q(a)), inference(resolution, [status(thm)], [i_0_1, i_0_2])).
cnf(c_0_5, plain, (r(X1)|~p(X1)), inference(resolution, [status(thm)], [i_0_2, i_0_3])).
cnf(c_0_6, plain, (r(a)), inference(resolution, [status(thm)], [c_0_4, i_0_3])).
";

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn config(exe: PathBuf, secs: u64) -> ExternalProverConfig {
    ExternalProverConfig {
        saturation_args: vec!["{file}".into()],
        limits: ProverLimits { timeout: Duration::from_secs(secs), ..ProverLimits::default() },
        ..ExternalProverConfig::rc_refute(exe)
    }
}

/// Derived clauses with variables renamed canonically, and for each its
/// parents' clauses in the same form.
fn shape(out: &SaturationOutput) -> BTreeSet<(String, BTreeSet<String>)> {
    let g = build_graph(out).unwrap();
    g.derived()
        .map(|v| {
            let key = |n| g.clause(n).clause.canonical_key();
            (key(v), g.parents(v).iter().map(|&p| key(p)).collect())
        })
        .collect()
}

#[test]
fn external_saturation_matches_internal_up_to_renaming() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("out.tstp"), TSTP).unwrap();
    let exe = script(dir.path(), "prover", &format!("cat '{}'", dir.path().join("out.tstp").display()));
    let problem = dir.path().join("toy.p");
    std::fs::write(&problem, "").unwrap();

    let external = run_external_saturation(&problem, &config(exe, 5)).unwrap();
    assert!(external.complete);
    assert_eq!(external.records.len(), 6);

    let axioms: Vec<AnnotatedClause> = AXIOMS
        .iter()
        .enumerate()
        .map(|(i, c)| AnnotatedClause::new(format!("a{}", i + 1), Role::Axiom, parse_clause(c).unwrap()))
        .collect();
    let internal = saturate_internal(&axioms, ProverLimits::default());
    assert!(internal.complete);
    assert_eq!(shape(&internal), shape(&external));
}

#[test]
fn status_lines_become_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let premises = [parse_clause("(p(a))").unwrap()];
    let goal = parse_clause("(p(a))").unwrap();
    for (status, want) in [
        ("Theorem", Verdict::Entailed(None)),
        ("CounterSatisfiable", Verdict::NotEntailed),
        ("GaveUp", Verdict::ResourceOut(Limit::Status("GaveUp".into()))),
    ] {
        let exe = script(dir.path(), status, &format!("echo '% SZS status {status} for $1'"));
        let oracle = ExternalOracle::new(config(exe, 5), 2).unwrap();
        assert_eq!(oracle.check(&premises, &goal).unwrap(), want, "{status}");
    }
}

#[test]
fn a_hung_prover_is_cut_off() {
    let dir = tempfile::tempdir().unwrap();
    let exe = script(dir.path(), "hang", "exec sleep 30");
    let oracle = ExternalOracle::new(config(exe, 1), 1).unwrap();
    let t = std::time::Instant::now();
    let v = oracle.check(&[parse_clause("(p(a))").unwrap()], &parse_clause("(q(a))").unwrap()).unwrap();
    assert_eq!(v, Verdict::ResourceOut(Limit::Timeout));
    assert!(t.elapsed() < Duration::from_secs(10));
}
