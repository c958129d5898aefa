//! Derivation DAG built from a saturation log.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{AnnotatedClause, Role};
use crate::prover::SaturationOutput;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate node name '{0}'")]
    DuplicateName(String),
    #[error("'{child}' names unknown parent '{parent}'")]
    UnknownParent { child: String, parent: String },
    #[error("axiom '{0}' has parents")]
    AxiomWithParents(String),
    #[error("derived node '{0}' has no parents")]
    DerivedWithoutParents(String),
    #[error("cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("depth must be at least 1")]
    DepthTooSmall,
    #[error("'{0}' is an axiom")]
    TargetIsAxiom(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub clause: AnnotatedClause,
    pub rule: String,
}

#[derive(Clone, Debug)]
pub struct DerivationGraph {
    nodes: Vec<Node>,
    by_name: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    depth: Vec<usize>,
}

/// The premise frontier at a given distance from a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthCut {
    pub target: NodeId,
    pub premises: BTreeSet<NodeId>,
    pub context_axioms: BTreeSet<NodeId>,
    pub depth: usize,
}

/// The ancestor-closed subgraph below one target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofSubgraph {
    pub target: NodeId,
    pub nodes: BTreeSet<NodeId>,
    /// `(parent, child)` pairs.
    pub edges: Vec<(NodeId, NodeId)>,
}

/// Node-count bounds for a depth-`d` binary proof: a path-shaped tree has
/// `2d+1` nodes, a complete binary tree `2^(d+1)-1`.
pub fn size_window(d: usize) -> (usize, usize) {
    let max = 1usize
        .checked_shl(d as u32 + 1)
        .map_or(usize::MAX, |v| v - 1);
    (2 * d + 1, max)
}

/// Builds and validates the DAG. Parents may be listed in any order; cycles,
/// dangling names and duplicate names are rejected.
pub fn build_graph(out: &SaturationOutput) -> Result<DerivationGraph, GraphError> {
    let mut by_name = HashMap::new();
    for (i, r) in out.records.iter().enumerate() {
        if by_name.insert(r.name.clone(), i).is_some() {
            return Err(GraphError::DuplicateName(r.name.clone()));
        }
    }
    let n = out.records.len();
    let mut parents = vec![Vec::new(); n];
    let mut children = vec![Vec::new(); n];
    for (i, r) in out.records.iter().enumerate() {
        let derived = !matches!(r.role, Role::Axiom | Role::NegatedConjecture);
        if !derived && !r.parents.is_empty() {
            return Err(GraphError::AxiomWithParents(r.name.clone()));
        }
        if derived && r.parents.is_empty() {
            return Err(GraphError::DerivedWithoutParents(r.name.clone()));
        }
        for p in &r.parents {
            let &pid = by_name.get(p).ok_or_else(|| GraphError::UnknownParent {
                child: r.name.clone(),
                parent: p.clone(),
            })?;
            if !parents[i].contains(&pid) {
                parents[i].push(pid);
                children[pid].push(i);
            }
        }
    }

    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<NodeId> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        topo.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if topo.len() < n {
        let stuck = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| out.records[i].name.clone())
            .collect();
        return Err(GraphError::Cycle(stuck));
    }

    let mut depth = vec![0usize; n];
    for &v in &topo {
        depth[v] = parents[v].iter().map(|&p| depth[p] + 1).max().unwrap_or(0);
    }

    let nodes = out
        .records
        .iter()
        .map(|r| Node {
            clause: AnnotatedClause::new(r.name.clone(), r.role, r.clause.clone()),
            rule: r.rule.clone(),
        })
        .collect();
    Ok(DerivationGraph {
        nodes,
        by_name,
        parents,
        children,
        topo,
        depth,
    })
}

impl DerivationGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sets the domain code on every node.
    pub fn set_domain(&mut self, domain: &str) {
        for n in &mut self.nodes {
            n.clause.source_domain = domain.to_string();
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn clause(&self, id: NodeId) -> &AnnotatedClause {
        &self.nodes[id].clause
    }

    pub fn id(&self, name: &str) -> Result<NodeId, GraphError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    fn check(&self, id: NodeId) -> Result<(), GraphError> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(format!("#{id}")))
        }
    }

    /// Distinct parents in the order the record listed them.
    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.parents[id].is_empty()
    }

    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_root(i))
    }

    pub fn derived(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.is_root(i))
    }

    /// Nodes with every parent before its children.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Proper ancestors of `id`.
    pub fn ancestors(&self, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(id)?;
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.parents[id].clone();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(&self.parents[v]);
            }
        }
        Ok(seen)
    }

    /// Proper descendants of `id`.
    pub fn descendants(&self, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(id)?;
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.children[id].clone();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(&self.children[v]);
            }
        }
        Ok(seen)
    }

    /// Axioms among the ancestors of `id`, or `{id}` for an axiom.
    pub fn context_axioms(&self, id: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        self.check(id)?;
        if self.is_root(id) {
            return Ok(BTreeSet::from([id]));
        }
        Ok(self
            .ancestors(id)?
            .into_iter()
            .filter(|&a| self.is_root(a))
            .collect())
    }

    /// Length in edges of the longest path from an axiom to `id`.
    pub fn node_depth(&self, id: NodeId) -> Result<usize, GraphError> {
        self.check(id)?;
        Ok(self.depth[id])
    }

    /// Walks `d` inference steps up from `target`. Branches reaching an axiom
    /// early stop there and the axiom joins the frontier.
    pub fn premises_at_depth(&self, target: NodeId, d: usize) -> Result<DepthCut, GraphError> {
        self.check(target)?;
        if d < 1 {
            return Err(GraphError::DepthTooSmall);
        }
        if self.is_root(target) {
            return Err(GraphError::TargetIsAxiom(self.nodes[target].clause.name.clone()));
        }
        let mut premises = BTreeSet::new();
        let mut layer = BTreeSet::from([target]);
        for _ in 0..d {
            let mut next = BTreeSet::new();
            for &v in &layer {
                if self.is_root(v) {
                    premises.insert(v);
                } else {
                    next.extend(&self.parents[v]);
                }
            }
            layer = next;
        }
        premises.extend(layer);
        Ok(DepthCut {
            target,
            premises,
            context_axioms: self.context_axioms(target)?,
            depth: d,
        })
    }

    /// The ancestor subgraph of `target` when it is a binary proof of depth
    /// exactly `d` whose size falls in [`size_window`].
    pub fn binary_proof_subgraph(
        &self,
        target: NodeId,
        d: usize,
    ) -> Result<Option<ProofSubgraph>, GraphError> {
        self.binary_proof_subgraph_in(target, d, size_window(d))
    }

    pub fn binary_proof_subgraph_in(
        &self,
        target: NodeId,
        d: usize,
        (min, max): (usize, usize),
    ) -> Result<Option<ProofSubgraph>, GraphError> {
        self.check(target)?;
        if d < 1 {
            return Err(GraphError::DepthTooSmall);
        }
        if self.depth[target] != d {
            return Ok(None);
        }
        let mut nodes = self.ancestors(target)?;
        nodes.insert(target);
        if nodes.len() < min || nodes.len() > max {
            return Ok(None);
        }
        let mut edges = Vec::new();
        for &v in &nodes {
            if self.is_root(v) {
                continue;
            }
            if self.parents[v].len() != 2 {
                return Ok(None);
            }
            edges.extend(self.parents[v].iter().map(|&p| (p, v)));
        }
        Ok(Some(ProofSubgraph {
            target,
            nodes,
            edges,
        }))
    }

    /// One `parent -> child` line per edge, by node name.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for &v in &self.topo {
            for &p in &self.parents[v] {
                let _ = writeln!(
                    out,
                    "{} -> {}",
                    self.nodes[p].clause.name, self.nodes[v].clause.name
                );
            }
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::formula::{parse_clause, Role};
    use crate::prover::{DerivationRecord, SaturationOutput};

    pub fn record(name: &str, parents: &[&str]) -> DerivationRecord {
        DerivationRecord {
            name: name.to_string(),
            role: if parents.is_empty() {
                Role::Axiom
            } else {
                Role::Derived
            },
            clause: parse_clause(&format!("(n_{}(a))", name.to_lowercase())).unwrap(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            rule: if parents.is_empty() { "input" } else { "resolution" }.to_string(),
        }
    }

    pub fn log(spec: &[(&str, &[&str])]) -> SaturationOutput {
        SaturationOutput {
            records: spec.iter().map(|(n, p)| record(n, p)).collect(),
            complete: true,
        }
    }

    /// A small entailment-task graph: L1 and L2 from axiom pairs, L3 from Ax3,
    /// T from L2 and L3.
    pub fn entailment_sample() -> SaturationOutput {
        log(&[
            ("Ax1", &[]),
            ("Ax2", &[]),
            ("Ax3", &[]),
            ("L1", &["Ax1", "Ax2"]),
            ("L2", &["Ax2", "Ax3"]),
            ("L3", &["Ax3"]),
            ("T", &["L2", "L3"]),
        ])
    }

    /// A small reconstruction-task graph.
    pub fn reconstruction_sample() -> SaturationOutput {
        log(&[
            ("C1", &[]),
            ("C2", &[]),
            ("C3", &[]),
            ("C4", &[]),
            ("C5", &["C1", "C2"]),
            ("C6", &["C3", "C4"]),
            ("C7", &["C5", "C6"]),
        ])
    }
}
