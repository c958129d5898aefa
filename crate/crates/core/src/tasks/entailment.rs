use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_from, DifficultySpec, EntailmentTask, TaskError, TaskKind, RETRY_BUDGET};
use crate::formula::Clause;
use crate::graph::{DerivationGraph, NodeId};
use crate::prover::{subsumed, EntailmentOracle};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Add { clause: Clause },
    Remove { clause: Clause },
    Replace { from: Clause, to: Clause },
}

/// Clauses of `g` that may be swapped into an entailment problem for
/// `theorem`: not the theorem, not derived from it, not empty and not a
/// subsumer of it. One per canonical form, in node order.
pub fn entailment_candidates(g: &DerivationGraph, theorem: NodeId) -> Result<Vec<Clause>, TaskError> {
    let below = g.descendants(theorem)?;
    let t = &g.clause(theorem).clause;
    let t_key = t.canonical_key();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in 0..g.len() {
        if v == theorem || below.contains(&v) {
            continue;
        }
        let c = &g.clause(v).clause;
        if c.is_empty() || subsumed(t, [c]) {
            continue;
        }
        let key = c.canonical_key();
        if key != t_key && seen.insert(key) {
            out.push(c.clone());
        }
    }
    Ok(out)
}

/// Applies exactly `k` edits to `p_correct`. Each edit is an addition, a
/// removal or a replacement, chosen uniformly among those feasible. A clause
/// that has been in the set once is never drawn again as an addition.
/// Returns the edited set in random order.
pub fn perturb_premises<R: Rng>(
    p_correct: &[Clause],
    candidates: &[Clause],
    k: usize,
    rng: &mut R,
) -> Result<(Vec<Clause>, Vec<Edit>), TaskError> {
    let mut current: Vec<Clause> = Vec::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for c in p_correct {
        if used.insert(c.canonical_key()) {
            current.push(c.clone());
        }
    }
    let mut pool: Vec<&Clause> = candidates
        .iter()
        .filter(|c| !used.contains(&c.canonical_key()))
        .collect();
    let mut edits = Vec::with_capacity(k);
    for step in 0..k {
        let mut ops = Vec::with_capacity(3);
        if !pool.is_empty() {
            ops.push(0);
        }
        if current.len() > 1 {
            ops.push(1);
        }
        if !pool.is_empty() && !current.is_empty() {
            ops.push(2);
        }
        if ops.is_empty() {
            return Err(TaskError::Infeasible(format!("edit {} of {k}", step + 1)));
        }
        match ops[rng.random_range(0..ops.len())] {
            0 => {
                let c = pool.swap_remove(rng.random_range(0..pool.len())).clone();
                used.insert(c.canonical_key());
                current.push(c.clone());
                edits.push(Edit::Add { clause: c });
            }
            1 => {
                let c = current.swap_remove(rng.random_range(0..current.len()));
                edits.push(Edit::Remove { clause: c });
            }
            _ => {
                let i = rng.random_range(0..current.len());
                let to = pool.swap_remove(rng.random_range(0..pool.len())).clone();
                used.insert(to.canonical_key());
                let from = std::mem::replace(&mut current[i], to.clone());
                edits.push(Edit::Replace { from, to });
            }
        }
    }
    current.shuffle(rng);
    Ok((current, edits))
}

/// Perturbs the depth-`d` premise frontier of `theorem` and labels the
/// result with the oracle. With `want` set, draws are repeated until the
/// label matches. Attempts without a definite verdict are dropped.
pub fn gen_entailment(
    g: &DerivationGraph,
    theorem: NodeId,
    spec: DifficultySpec,
    seed: u64,
    oracle: &dyn EntailmentOracle,
    want: Option<bool>,
) -> Result<EntailmentTask, TaskError> {
    spec.validate()?;
    if spec.kind != TaskKind::Entailment {
        return Err(TaskError::InvalidSpec(format!("{} spec for an entailment task", spec.kind)));
    }
    let cut = g.premises_at_depth(theorem, spec.d)?;
    let p_correct: Vec<Clause> = cut.premises.iter().map(|&v| g.clause(v).clause.clone()).collect();
    let candidates = entailment_candidates(g, theorem)?;
    let conjecture = g.clause(theorem).clause.clone();
    let mut rng = rng_from(seed);
    for _ in 0..RETRY_BUDGET {
        let (premises, edits) = perturb_premises(&p_correct, &candidates, spec.k, &mut rng)?;
        let Some(label) = oracle.check(&premises, &conjecture)?.definite() else {
            continue;
        };
        if want.is_some_and(|w| w != label) {
            continue;
        }
        let theorem_clause = g.clause(theorem);
        return Ok(EntailmentTask {
            context: cut.context_axioms.iter().map(|&v| g.clause(v).clone()).collect(),
            premises,
            conjecture,
            label,
            spec,
            domain: theorem_clause.source_domain.clone(),
            seed,
            theorem_name: theorem_clause.name.clone(),
            edits,
        });
    }
    Err(TaskError::RetryExhausted(RETRY_BUDGET))
}
