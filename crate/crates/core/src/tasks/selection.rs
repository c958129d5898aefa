use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{rng_from, DifficultySpec, SelectionTask, SpotCheck, TaskError, TaskKind, RETRY_BUDGET};
use crate::formula::Clause;
use crate::graph::{DerivationGraph, NodeId};
use crate::prover::{subsumed, EntailmentOracle, Verdict};

/// Greedy deletion in a fixed order: input order, except that clauses
/// subsuming the theorem are tried last. The result is 1-minimal: dropping
/// any single member loses entailment. `Ok(None)` means some query had no
/// definite verdict and the instance should be discarded.
pub fn minimize_premises(
    p_sufficient: &[Clause],
    theorem: &Clause,
    oracle: &dyn EntailmentOracle,
) -> Result<Option<Vec<Clause>>, TaskError> {
    let mut seen = BTreeSet::new();
    let mut order: Vec<Clause> = p_sufficient
        .iter()
        .filter(|c| seen.insert(c.canonical_key()))
        .cloned()
        .collect();
    order.sort_by_key(|c| subsumed(theorem, [c]));
    match oracle.check(&order, theorem)? {
        Verdict::Entailed(_) => {}
        Verdict::ResourceOut(_) => return Ok(None),
        v @ Verdict::NotEntailed => return Err(TaskError::NotSufficient(v)),
    }
    let mut keep = vec![true; order.len()];
    for i in 0..order.len() {
        keep[i] = false;
        let trial: Vec<Clause> = order
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        match oracle.check(&trial, theorem)? {
            Verdict::Entailed(_) => {}
            Verdict::NotEntailed => keep[i] = true,
            Verdict::ResourceOut(_) => return Ok(None),
        }
    }
    Ok(Some(
        order.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect(),
    ))
}

/// Draws `k` distinct clauses of `g` for the pool. Excluded: the theorem and
/// its ancestors, anything with the canonical form of a member of `minimal`,
/// the empty clause, and clauses subsuming the theorem.
pub fn pick_distractors<R: Rng>(
    g: &DerivationGraph,
    theorem: NodeId,
    minimal: &[Clause],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Clause>, TaskError> {
    let above = g.ancestors(theorem)?;
    let t = &g.clause(theorem).clause;
    let mut seen: BTreeSet<String> = minimal.iter().map(Clause::canonical_key).collect();
    seen.insert(t.canonical_key());
    let mut cands = Vec::new();
    for v in 0..g.len() {
        if v == theorem || above.contains(&v) {
            continue;
        }
        let c = &g.clause(v).clause;
        if c.is_empty() || subsumed(t, [c]) {
            continue;
        }
        if seen.insert(c.canonical_key()) {
            cands.push(c);
        }
    }
    if cands.len() < k {
        return Err(TaskError::InsufficientCandidates {
            needed: k,
            available: cands.len(),
        });
    }
    Ok(index::sample(rng, cands.len(), k)
        .into_iter()
        .map(|i| cands[i].clone())
        .collect())
}

/// Minimizes the depth-`d` premise frontier of `theorem`, then hides the
/// minimal set in a shuffled pool with `k` distractors.
pub fn gen_selection(
    g: &DerivationGraph,
    theorem: NodeId,
    spec: DifficultySpec,
    seed: u64,
    oracle: &dyn EntailmentOracle,
) -> Result<SelectionTask, TaskError> {
    spec.validate()?;
    if spec.kind != TaskKind::Selection {
        return Err(TaskError::InvalidSpec(format!("{} spec for a selection task", spec.kind)));
    }
    let cut = g.premises_at_depth(theorem, spec.d)?;
    let sufficient: Vec<Clause> = cut.premises.iter().map(|&v| g.clause(v).clause.clone()).collect();
    let t = g.clause(theorem).clause.clone();
    let minimal = minimize_premises(&sufficient, &t, oracle)?.ok_or(TaskError::ResourceOut)?;
    for i in 0..minimal.len() {
        let mut rest = minimal.clone();
        rest.remove(i);
        match oracle.check(&rest, &t)? {
            Verdict::NotEntailed => {}
            Verdict::ResourceOut(_) => return Err(TaskError::ResourceOut),
            v @ Verdict::Entailed(_) => return Err(TaskError::NotSufficient(v)),
        }
    }
    let mut rng = rng_from(seed);
    for _ in 0..RETRY_BUDGET {
        let distractors = pick_distractors(g, theorem, &minimal, spec.k, &mut rng)?;
        let check = if distractors.is_empty() {
            SpotCheck::Skipped
        } else {
            match oracle.check(&distractors, &t)? {
                Verdict::Entailed(_) => continue,
                Verdict::NotEntailed => SpotCheck::NotEntailed,
                Verdict::ResourceOut(_) => SpotCheck::ResourceOut,
            }
        };
        let mut pool: Vec<(bool, Clause)> = minimal
            .iter()
            .map(|c| (true, c.clone()))
            .chain(distractors.into_iter().map(|c| (false, c)))
            .collect();
        pool.shuffle(&mut rng);
        let answer = pool
            .iter()
            .enumerate()
            .filter(|(_, (m, _))| *m)
            .map(|(i, _)| i + 1)
            .collect();
        let name = g.clause(theorem);
        return Ok(SelectionTask {
            context: cut.context_axioms.iter().map(|&v| g.clause(v).clone()).collect(),
            theorem: t,
            pool: pool.into_iter().map(|(_, c)| c).collect(),
            answer,
            spec,
            domain: name.source_domain.clone(),
            seed,
            theorem_name: name.name.clone(),
            distractor_check: check,
        });
    }
    Err(TaskError::RetryExhausted(RETRY_BUDGET))
}
