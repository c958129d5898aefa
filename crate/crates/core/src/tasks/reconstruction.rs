use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::{rng_from, sort_triples, DifficultySpec, ReconstructionTask, TaskError, TaskKind};
use crate::graph::{DerivationGraph, NodeId};

/// Shuffles the binary proof graph of depth `d` below `theorem` into a
/// numbered clause list and records every derivation step by index.
pub fn gen_reconstruction(
    g: &DerivationGraph,
    theorem: NodeId,
    spec: DifficultySpec,
    seed: u64,
) -> Result<ReconstructionTask, TaskError> {
    spec.validate()?;
    if spec.kind != TaskKind::Reconstruction {
        return Err(TaskError::InvalidSpec(format!("{} spec for a reconstruction task", spec.kind)));
    }
    let sub = g
        .binary_proof_subgraph(theorem, spec.d)?
        .ok_or(TaskError::NoSubgraph(spec.d))?;
    let mut keys = BTreeSet::new();
    for &v in &sub.nodes {
        let c = &g.clause(v).clause;
        if !keys.insert(c.canonical_key()) {
            return Err(TaskError::Duplicate(c.to_string()));
        }
    }
    let mut order: Vec<NodeId> = sub.nodes.iter().copied().collect();
    order.shuffle(&mut rng_from(seed));
    let index: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    let mut answer: Vec<(usize, usize, usize)> = order
        .iter()
        .filter(|&&v| !g.is_root(v))
        .map(|&v| {
            let p = g.parents(v);
            (index[&v], index[&p[0]], index[&p[1]])
        })
        .collect();
    sort_triples(&mut answer);
    let t = g.clause(theorem);
    Ok(ReconstructionTask {
        clauses: order.iter().map(|&v| g.clause(v).clause.clone()).collect(),
        answer,
        theorem_index: index[&theorem],
        spec,
        domain: t.source_domain.clone(),
        seed,
        theorem_name: t.name.clone(),
    })
}
