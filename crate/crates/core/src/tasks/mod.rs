//! Task families built from a rated derivation graph.

mod entailment;
mod prompt;
mod reconstruction;
mod selection;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::formula::{AnnotatedClause, Clause};
use crate::graph::GraphError;
use crate::prover::{ProverError, Verdict};

pub use entailment::{entailment_candidates, gen_entailment, perturb_premises, Edit};
pub use prompt::{domain_display_name, render_prompt};
pub use reconstruction::gen_reconstruction;
pub use selection::{gen_selection, minimize_premises, pick_distractors};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Entailment,
    Selection,
    Reconstruction,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Entailment, TaskKind::Selection, TaskKind::Reconstruction];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Entailment => "entailment",
            TaskKind::Selection => "selection",
            TaskKind::Reconstruction => "reconstruction",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const ENTAILMENT_K: [usize; 4] = [2, 3, 4, 6];
pub const SELECTION_K: [usize; 4] = [2, 4, 6, 8];
pub const RECONSTRUCTION_D: [usize; 4] = [1, 2, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DifficultySpec {
    pub level: u8,
    pub d: usize,
    pub k: usize,
    pub kind: TaskKind,
}

impl DifficultySpec {
    /// The default level matrix: level `i` uses depth `i` and the `i`-th
    /// entry of the family's k-set. Reconstruction has no k.
    pub fn for_level(kind: TaskKind, level: u8) -> Result<Self, TaskError> {
        if !(1..=4).contains(&level) {
            return Err(TaskError::InvalidSpec(format!("level {level} outside 1..=4")));
        }
        let i = level as usize - 1;
        let (d, k) = match kind {
            TaskKind::Entailment => (level as usize, ENTAILMENT_K[i]),
            TaskKind::Selection => (level as usize, SELECTION_K[i]),
            TaskKind::Reconstruction => (RECONSTRUCTION_D[i], 0),
        };
        Ok(DifficultySpec { level, d, k, kind })
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if !(1..=4).contains(&self.level) {
            return Err(TaskError::InvalidSpec(format!("level {} outside 1..=4", self.level)));
        }
        if self.d < 1 {
            return Err(TaskError::InvalidSpec("depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntailmentTask {
    pub context: Vec<AnnotatedClause>,
    pub premises: Vec<Clause>,
    pub conjecture: Clause,
    pub label: bool,
    pub spec: DifficultySpec,
    pub domain: String,
    pub seed: u64,
    pub theorem_name: String,
    pub edits: Vec<Edit>,
}

/// Outcome of the check that the distractors alone do not prove the theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpotCheck {
    NotEntailed,
    ResourceOut,
    /// No distractors were drawn.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTask {
    pub context: Vec<AnnotatedClause>,
    pub theorem: Clause,
    pub pool: Vec<Clause>,
    /// 1-based, increasing.
    pub answer: Vec<usize>,
    pub spec: DifficultySpec,
    pub domain: String,
    pub seed: u64,
    pub theorem_name: String,
    pub distractor_check: SpotCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionTask {
    pub clauses: Vec<Clause>,
    /// `(child, parent, parent)` with 1-based indices, parents increasing,
    /// triples in the order their rendered lines sort.
    pub answer: Vec<(usize, usize, usize)>,
    pub theorem_index: usize,
    pub spec: DifficultySpec,
    pub domain: String,
    pub seed: u64,
    pub theorem_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskInstance {
    Entailment(EntailmentTask),
    Selection(SelectionTask),
    Reconstruction(ReconstructionTask),
}

impl TaskInstance {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskInstance::Entailment(_) => TaskKind::Entailment,
            TaskInstance::Selection(_) => TaskKind::Selection,
            TaskInstance::Reconstruction(_) => TaskKind::Reconstruction,
        }
    }

    pub fn spec(&self) -> &DifficultySpec {
        match self {
            TaskInstance::Entailment(t) => &t.spec,
            TaskInstance::Selection(t) => &t.spec,
            TaskInstance::Reconstruction(t) => &t.spec,
        }
    }

    pub fn domain(&self) -> &str {
        match self {
            TaskInstance::Entailment(t) => &t.domain,
            TaskInstance::Selection(t) => &t.domain,
            TaskInstance::Reconstruction(t) => &t.domain,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            TaskInstance::Entailment(t) => t.seed,
            TaskInstance::Selection(t) => t.seed,
            TaskInstance::Reconstruction(t) => t.seed,
        }
    }

    pub fn theorem_name(&self) -> &str {
        match self {
            TaskInstance::Entailment(t) => &t.theorem_name,
            TaskInstance::Selection(t) => &t.theorem_name,
            TaskInstance::Reconstruction(t) => &t.theorem_name,
        }
    }

    /// The expected answer in the format the prompt asks for.
    pub fn answer_text(&self) -> String {
        match self {
            TaskInstance::Entailment(t) => if t.label { "True" } else { "False" }.to_string(),
            TaskInstance::Selection(t) => format_index_list(&t.answer),
            TaskInstance::Reconstruction(t) => format_triples(&t.answer),
        }
    }
}

pub fn format_index_list(xs: &[usize]) -> String {
    let parts: Vec<String> = xs.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(", "))
}

pub fn format_triples(ts: &[(usize, usize, usize)]) -> String {
    ts.iter()
        .map(|(c, p, q)| format!("{c} <- {p}, {q}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parents in increasing order, then lines sorted as strings.
pub fn sort_triples(ts: &mut [(usize, usize, usize)]) {
    for t in ts.iter_mut() {
        if t.1 > t.2 {
            std::mem::swap(&mut t.1, &mut t.2);
        }
    }
    ts.sort_by_key(|&(c, p, q)| format!("{c} <- {p}, {q}"));
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error("invalid difficulty: {0}")]
    InvalidSpec(String),
    #[error("no feasible edit: {0}")]
    Infeasible(String),
    #[error("need {needed} candidates, have {available}")]
    InsufficientCandidates { needed: usize, available: usize },
    #[error("oracle gave no definite verdict")]
    ResourceOut,
    #[error("premises do not entail the theorem ({0:?})")]
    NotSufficient(Verdict),
    #[error("no binary proof graph of depth {0}")]
    NoSubgraph(usize),
    #[error("duplicate clause {0} in an indexed list")]
    Duplicate(String),
    #[error("gave up after {0} attempts")]
    RetryExhausted(usize),
}

impl TaskError {
    /// Errors that only rule out this instance, as opposed to broken
    /// configuration or a failing prover process.
    pub fn is_discard(&self) -> bool {
        !matches!(self, TaskError::Prover(_) | TaskError::InvalidSpec(_))
    }
}

/// Tries per instance before a generator reports [`TaskError::RetryExhausted`].
pub const RETRY_BUDGET: usize = 12;

/// Seed of one instance attempt, derived from its identifying tuple so it
/// does not depend on scheduling.
pub fn instance_seed(global_seed: u64, domain: &str, kind: TaskKind, level: u8, index: usize, attempt: usize) -> u64 {
    let text = format!("{global_seed}:{domain}:{kind}:{level}:{index}:{attempt}");
    let digest = Sha256::digest(text.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_matrix_is_diagonal() {
        let e = DifficultySpec::for_level(TaskKind::Entailment, 3).unwrap();
        assert_eq!((e.d, e.k), (3, 4));
        let s = DifficultySpec::for_level(TaskKind::Selection, 4).unwrap();
        assert_eq!((s.d, s.k), (4, 8));
        let r = DifficultySpec::for_level(TaskKind::Reconstruction, 2).unwrap();
        assert_eq!((r.d, r.k), (2, 0));
        assert!(DifficultySpec::for_level(TaskKind::Entailment, 5).is_err());
    }

    #[test]
    fn triples_sort_like_rendered_lines() {
        let mut t = vec![(2, 9, 4), (11, 16, 2), (7, 4, 13), (12, 5, 1)];
        sort_triples(&mut t);
        assert_eq!(format_triples(&t), "11 <- 2, 16\n12 <- 1, 5\n2 <- 4, 9\n7 <- 4, 13");
    }

    #[test]
    fn index_list_format() {
        assert_eq!(format_index_list(&[1, 3, 7]), "[1, 3, 7]");
        assert_eq!(format_index_list(&[]), "[]");
    }

    #[test]
    fn instance_seeds_differ_by_every_field() {
        let draw = instance_seed;
        let base = draw(1, "SET", TaskKind::Selection, 2, 3, 0);
        assert_eq!(base, draw(1, "SET", TaskKind::Selection, 2, 3, 0));
        assert_ne!(base, draw(2, "SET", TaskKind::Selection, 2, 3, 0));
        assert_ne!(base, draw(1, "TOP", TaskKind::Selection, 2, 3, 0));
        assert_ne!(base, draw(1, "SET", TaskKind::Entailment, 2, 3, 0));
        assert_ne!(base, draw(1, "SET", TaskKind::Selection, 1, 3, 0));
        assert_ne!(base, draw(1, "SET", TaskKind::Selection, 2, 4, 0));
        assert_ne!(base, draw(1, "SET", TaskKind::Selection, 2, 3, 1));
    }
}
