//! Answer parsing and grading.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prover::{EntailmentOracle, ProverError, Verdict};
use crate::tasks::{EntailmentTask, ReconstructionTask, SelectionTask, TaskInstance, TaskKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ParsedAnswer {
    Entailment(bool),
    /// Positive, increasing, no repeats.
    Selection(Vec<usize>),
    /// `(child, parent, parent)` in answer order.
    Reconstruction(Vec<(usize, usize, usize)>),
}

impl ParsedAnswer {
    pub fn kind(&self) -> TaskKind {
        match self {
            ParsedAnswer::Entailment(_) => TaskKind::Entailment,
            ParsedAnswer::Selection(_) => TaskKind::Selection,
            ParsedAnswer::Reconstruction(_) => TaskKind::Reconstruction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("format: {0}")]
pub struct FormatError(pub String);

#[derive(Debug, Error)]
pub enum GradeError {
    #[error("{answer} answer for a {task} task")]
    KindMismatch { task: TaskKind, answer: TaskKind },
    #[error(transparent)]
    Prover(#[from] ProverError),
}

/// Whether stage one demands that every listed clause takes part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Sound,
    Unsound,
    /// No definite verdict; scored as unsound.
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub child: usize,
    pub parents: (usize, usize),
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub score: f64,
    pub structural_ok: bool,
    pub step_verdicts: Vec<StepVerdict>,
    /// Some step had no definite verdict.
    pub flagged: bool,
    pub failure: Option<String>,
}

impl GradeReport {
    fn binary(ok: bool) -> Self {
        GradeReport {
            score: if ok { 1.0 } else { 0.0 },
            structural_ok: true,
            step_verdicts: Vec::new(),
            flagged: false,
            failure: None,
        }
    }

    fn failed(reason: impl Into<String>) -> Self {
        GradeReport {
            score: 0.0,
            structural_ok: false,
            step_verdicts: Vec::new(),
            flagged: false,
            failure: Some(reason.into()),
        }
    }
}

fn strip_code(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
        .replace('`', "")
}

fn parse_entailment(text: &str) -> Result<bool, FormatError> {
    let mut seen = BTreeSet::new();
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        if word.eq_ignore_ascii_case("true") {
            seen.insert(true);
        } else if word.eq_ignore_ascii_case("false") {
            seen.insert(false);
        }
    }
    match seen.len() {
        1 => Ok(seen.into_iter().next().unwrap()),
        0 => Err(FormatError("no True or False".into())),
        _ => Err(FormatError("both True and False".into())),
    }
}

fn parse_index(s: &str) -> Result<usize, FormatError> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err(FormatError("index 0".into())),
        Ok(n) => Ok(n),
        Err(_) => Err(FormatError(format!("not an index: {:?}", s.trim()))),
    }
}

fn parse_selection(text: &str) -> Result<Vec<usize>, FormatError> {
    let text = strip_code(text);
    let body = match (text.find('['), text.find(']')) {
        (Some(a), Some(b)) if a < b => &text[a + 1..b],
        (None, None) => text.trim(),
        _ => return Err(FormatError("unbalanced brackets".into())),
    };
    let body = body.trim();
    if body.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse_index)
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_triple(line: &str) -> Result<(usize, usize, usize), FormatError> {
    let line = line.trim().trim_start_matches(['-', '*']).trim();
    let (child, parents) = line
        .split_once("<-")
        .ok_or_else(|| FormatError(format!("no `<-` in {line:?}")))?;
    let (p, q) = parents
        .split_once(',')
        .ok_or_else(|| FormatError(format!("expected two parents in {line:?}")))?;
    let t = (parse_index(child)?, parse_index(p)?, parse_index(q)?);
    if t.1 == t.2 {
        return Err(FormatError(format!("repeated parent in {line:?}")));
    }
    Ok(t)
}

/// Lenient extraction of the answer a prompt asks for. Code fences and
/// backticks are ignored everywhere.
pub fn parse_answer(kind: TaskKind, text: &str) -> Result<ParsedAnswer, FormatError> {
    match kind {
        TaskKind::Entailment => parse_entailment(text).map(ParsedAnswer::Entailment),
        TaskKind::Selection => parse_selection(text).map(ParsedAnswer::Selection),
        TaskKind::Reconstruction => strip_code(text)
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(parse_triple)
            .collect::<Result<Vec<_>, _>>()
            .map(ParsedAnswer::Reconstruction),
    }
}

fn mismatch(task: TaskKind, answer: &ParsedAnswer) -> GradeError {
    GradeError::KindMismatch {
        task,
        answer: answer.kind(),
    }
}

pub fn grade_entailment(task: &EntailmentTask, answer: &ParsedAnswer) -> Result<GradeReport, GradeError> {
    match answer {
        ParsedAnswer::Entailment(b) => Ok(GradeReport::binary(*b == task.label)),
        other => Err(mismatch(TaskKind::Entailment, other)),
    }
}

/// Exact set match.
pub fn grade_selection(task: &SelectionTask, answer: &ParsedAnswer) -> Result<GradeReport, GradeError> {
    match answer {
        ParsedAnswer::Selection(xs) => {
            let want: BTreeSet<usize> = task.answer.iter().copied().collect();
            let got: BTreeSet<usize> = xs.iter().copied().collect();
            Ok(GradeReport::binary(want == got))
        }
        other => Err(mismatch(TaskKind::Selection, other)),
    }
}

/// Stage one: indices in range, one derivation per child, no cycles and,
/// when strict, every clause mentioned.
fn structure(n: usize, steps: &[(usize, usize, usize)], strictness: Strictness) -> Result<(), String> {
    let mut parents: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    for &(c, p, q) in steps {
        if let Some(&bad) = [c, p, q].iter().find(|&&i| i > n) {
            return Err(format!("index {bad} out of range 1..={n}"));
        }
        if parents.insert(c, [p, q]).is_some() {
            return Err(format!("clause {c} derived twice"));
        }
    }
    // 0 unvisited, 1 on the stack, 2 done
    let mut state = vec![0u8; n + 1];
    for &start in parents.keys() {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            let ps = parents.get(&v).map(|p| &p[..]).unwrap_or(&[]);
            if top.1 < ps.len() {
                let p = ps[top.1];
                top.1 += 1;
                match state[p] {
                    0 => {
                        state[p] = 1;
                        stack.push((p, 0));
                    }
                    1 => return Err(format!("cycle through clause {p}")),
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    if strictness == Strictness::Strict {
        let used: BTreeSet<usize> = steps.iter().flat_map(|&(c, p, q)| [c, p, q]).collect();
        if let Some(i) = (1..=n).find(|i| !used.contains(i)) {
            return Err(format!("clause {i} unused"));
        }
    }
    Ok(())
}

/// Two stages: structural coherence, then one oracle call per step. The
/// score is the number of sound steps over the number of ground-truth steps,
/// capped at 1.
pub fn grade_reconstruction(
    task: &ReconstructionTask,
    answer: &ParsedAnswer,
    oracle: &dyn EntailmentOracle,
    strictness: Strictness,
) -> Result<GradeReport, GradeError> {
    let steps = match answer {
        ParsedAnswer::Reconstruction(s) => s,
        other => return Err(mismatch(TaskKind::Reconstruction, other)),
    };
    if let Err(why) = structure(task.clauses.len(), steps, strictness) {
        return Ok(GradeReport::failed(format!("structure: {why}")));
    }
    let verdicts = steps
        .par_iter()
        .map(|&(c, p, q)| {
            let premises = [task.clauses[p - 1].clone(), task.clauses[q - 1].clone()];
            let outcome = match oracle.check(&premises, &task.clauses[c - 1])? {
                Verdict::Entailed(_) => StepOutcome::Sound,
                Verdict::NotEntailed => StepOutcome::Unsound,
                Verdict::ResourceOut(_) => StepOutcome::Undecided,
            };
            Ok(StepVerdict {
                child: c,
                parents: (p, q),
                outcome,
            })
        })
        .collect::<Result<Vec<_>, ProverError>>()?;
    let sound = verdicts.iter().filter(|v| v.outcome == StepOutcome::Sound).count();
    let denom = task.answer.len().max(1);
    Ok(GradeReport {
        score: (sound as f64 / denom as f64).min(1.0),
        structural_ok: true,
        flagged: verdicts.iter().any(|v| v.outcome == StepOutcome::Undecided),
        step_verdicts: verdicts,
        failure: None,
    })
}

/// Parses `text` for `task` and grades it. Unparseable answers score 0 with
/// a `format` failure.
pub fn grade_answer(
    task: &TaskInstance,
    text: &str,
    oracle: &dyn EntailmentOracle,
    strictness: Strictness,
) -> Result<GradeReport, GradeError> {
    let parsed = match parse_answer(task.kind(), text) {
        Ok(p) => p,
        Err(e) => return Ok(GradeReport::failed(e.to_string())),
    };
    match task {
        TaskInstance::Entailment(t) => grade_entailment(t, &parsed),
        TaskInstance::Selection(t) => grade_selection(t, &parsed),
        TaskInstance::Reconstruction(t) => grade_reconstruction(t, &parsed, oracle, strictness),
    }
}
