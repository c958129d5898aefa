use std::sync::OnceLock;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rc_core::grade::{grade_answer, Strictness};
use rc_core::pipeline::{build_domain, emit_jsonl, generate_configuration, DatasetRecord, DomainGraph, ManifestMeta, PipelineConfig};
use rc_core::prover::{EntailmentOracle, InternalOracle, ProverLimits};
use rc_core::tasks::{format_triples, TaskInstance, TaskKind};

fn config() -> PipelineConfig {
    PipelineConfig { count: 6, seed: 11, ..PipelineConfig::default() }
}

fn graphs() -> &'static Vec<DomainGraph> {
    static G: OnceLock<Vec<DomainGraph>> = OnceLock::new();
    G.get_or_init(|| {
        let cfg = config();
        cfg.domains.iter().take(3).map(|d| build_domain(&cfg, d).unwrap()).collect()
    })
}

fn oracle() -> InternalOracle {
    InternalOracle::new(ProverLimits::default())
}

fn records(kind: TaskKind, levels: &[u8]) -> Vec<DatasetRecord> {
    let cfg = config();
    let o = oracle();
    let mut out = Vec::new();
    for dg in graphs() {
        for &level in levels {
            out.extend(generate_configuration(&cfg, dg, kind, level, &o).unwrap().0);
        }
    }
    out
}

#[test]
fn reference_answers_grade_perfectly() {
    let o = oracle();
    for kind in TaskKind::ALL {
        let recs = records(kind, &[1, 3]);
        assert!(!recs.is_empty(), "{kind}");
        for r in &recs {
            for strictness in [Strictness::Strict, Strictness::Lenient] {
                let report = grade_answer(&r.task, &r.answer, &o, strictness).unwrap();
                assert_eq!(report.score, 1.0, "{} {strictness:?}: {report:?}", r.id);
            }
        }
    }
}

#[test]
fn dropping_or_corrupting_steps_never_helps() {
    let o = oracle();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut corrupted_unsound = 0;
    for r in records(TaskKind::Reconstruction, &[2, 4]) {
        let TaskInstance::Reconstruction(t) = &r.task else { unreachable!() };
        let n = t.answer.len() as f64;
        let mut steps = t.answer.clone();
        steps.shuffle(&mut rng);
        for k in 1..steps.len().min(4) {
            let kept = format_triples(&steps[k..]);
            for strictness in [Strictness::Strict, Strictness::Lenient] {
                let score = grade_answer(&r.task, &kept, &o, strictness).unwrap().score;
                assert!(score <= (n - k as f64) / n + 1e-12, "{}: {score}", r.id);
            }
        }
        let mut wrong = t.answer.clone();
        let at = rng.random_range(0..wrong.len());
        let (c, p, q) = wrong[at];
        let Some(&other) = (1..=t.clauses.len())
            .filter(|&i| i != c && i != p && i != q)
            .collect::<Vec<_>>()
            .choose(&mut rng)
        else {
            continue;
        };
        wrong[at] = (c, other.min(q), other.max(q));
        let premises = [t.clauses[other - 1].clone(), t.clauses[q - 1].clone()];
        let score = grade_answer(&r.task, &format_triples(&wrong), &o, Strictness::Lenient).unwrap().score;
        assert!(score <= 1.0);
        if o.check(&premises, &t.clauses[c - 1]).unwrap().is_not_entailed() {
            corrupted_unsound += 1;
            assert!(score < 1.0, "{}: {score}", r.id);
        }
    }
    assert!(corrupted_unsound > 0);
}

#[test]
fn selection_grading_ignores_order_and_spacing() {
    let o = oracle();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for r in records(TaskKind::Selection, &[1, 2]) {
        let TaskInstance::Selection(t) = &r.task else { unreachable!() };
        let mut xs = t.answer.clone();
        xs.shuffle(&mut rng);
        let text = xs.iter().map(|x| format!("  {x} ")).collect::<Vec<_>>().join(",\n");
        assert_eq!(grade_answer(&r.task, &text, &o, Strictness::Strict).unwrap().score, 1.0, "{text}");
        if let Some((_, rest)) = xs.split_first() {
            let short = rest.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
            assert_eq!(grade_answer(&r.task, &short, &o, Strictness::Strict).unwrap().score, 0.0);
        }
    }
}

#[test]
fn entailment_labels_are_balanced() {
    let recs = records(TaskKind::Entailment, &[1, 2, 3, 4]);
    assert!(recs.len() >= 50, "{}", recs.len());
    let yes = recs.iter().filter(|r| r.answer == "True").count() as f64 / recs.len() as f64;
    assert!((0.4..=0.6).contains(&yes), "{yes}");
}

#[test]
fn generation_is_a_pure_function() {
    let cfg = config();
    let o = oracle();
    let dg = &graphs()[0];
    for kind in TaskKind::ALL {
        let a = generate_configuration(&cfg, dg, kind, 2, &o).unwrap();
        let b = generate_configuration(&cfg, dg, kind, 2, &o).unwrap();
        assert_eq!(serde_json::to_string(&a.0).unwrap(), serde_json::to_string(&b.0).unwrap());
        assert_eq!(a.1, b.1);
    }
    let shifted = PipelineConfig { seed: 12, ..config() };
    let a = generate_configuration(&cfg, dg, TaskKind::Selection, 2, &o).unwrap().0;
    let b = generate_configuration(&shifted, dg, TaskKind::Selection, 2, &o).unwrap().0;
    assert_ne!(a, b);
}

#[test]
fn manifests_hash_only_content() {
    let dir = tempfile::tempdir().unwrap();
    let recs = records(TaskKind::Reconstruction, &[1]);
    let meta = ManifestMeta { global_seed: 11, ..ManifestMeta::default() };
    let a = emit_jsonl(&recs, &dir.path().join("a.jsonl"), meta.clone()).unwrap();
    let b = emit_jsonl(&recs, &dir.path().join("b.jsonl"), meta.clone()).unwrap();
    assert_eq!(a.content_hash, b.content_hash);
    assert_eq!(a.dataset_sha256, b.dataset_sha256);
    assert_eq!(std::fs::read(dir.path().join("a.jsonl")).unwrap(), std::fs::read(dir.path().join("b.jsonl")).unwrap());
    let fewer = emit_jsonl(&recs[1..], &dir.path().join("c.jsonl"), meta).unwrap();
    assert_ne!(fewer.content_hash, a.content_hash);
}
