//! Given-clause resolution engine over interned terms.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use crate::formula::{Clause, Literal, Role, Term};

use super::order::kbo_gt;
use super::{DerivationRecord, Limit, ProverLimits};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum ETerm {
    Var(u32),
    App(u32, Vec<ETerm>),
}

impl ETerm {
    fn weight(&self) -> usize {
        match self {
            ETerm::Var(_) => 1,
            ETerm::App(_, args) => 1 + args.iter().map(ETerm::weight).sum::<usize>(),
        }
    }

    fn shifted(&self, by: u32) -> ETerm {
        match self {
            ETerm::Var(v) => ETerm::Var(v + by),
            ETerm::App(f, args) => ETerm::App(*f, args.iter().map(|a| a.shifted(by)).collect()),
        }
    }

    fn renumber(&self, map: &mut HashMap<u32, u32>) -> ETerm {
        match self {
            ETerm::Var(v) => {
                let next = map.len() as u32;
                ETerm::Var(*map.entry(*v).or_insert(next))
            }
            ETerm::App(f, args) => ETerm::App(*f, args.iter().map(|a| a.renumber(map)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct ELit {
    pub pos: bool,
    pub pred: u32,
    pub args: Vec<ETerm>,
}

impl ELit {
    fn weight(&self) -> usize {
        1 + self.args.iter().map(ETerm::weight).sum::<usize>()
    }

    fn atom(&self) -> ETerm {
        ETerm::App(self.pred, self.args.clone())
    }

    fn mask_bit(&self) -> u64 {
        1u64 << ((self.pred as u64 * 2 + self.pos as u64) % 64)
    }
}

/// Variables are numbered `0..nvars` by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct EClause {
    pub lits: Vec<ELit>,
    pub nvars: u32,
}

impl EClause {
    /// Renumbers variables by first occurrence and merges identical literals.
    pub fn normalized(lits: Vec<ELit>) -> EClause {
        let mut out: Vec<ELit> = Vec::with_capacity(lits.len());
        for l in lits {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        let mut map = HashMap::new();
        let lits = out
            .into_iter()
            .map(|l| ELit {
                pos: l.pos,
                pred: l.pred,
                args: l.args.iter().map(|a| a.renumber(&mut map)).collect(),
            })
            .collect();
        EClause {
            lits,
            nvars: map.len() as u32,
        }
    }

    pub fn weight(&self) -> usize {
        self.lits.iter().map(ELit::weight).sum()
    }

    pub fn is_tautology(&self) -> bool {
        self.lits.iter().enumerate().any(|(i, a)| {
            self.lits[i + 1..]
                .iter()
                .any(|b| a.pos != b.pos && a.pred == b.pred && a.args == b.args)
        })
    }

    fn mask(&self) -> u64 {
        self.lits.iter().fold(0, |m, l| m | l.mask_bit())
    }
}

#[derive(Default, Clone, Debug)]
pub(crate) struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    fn import_term(&mut self, t: &Term, vars: &mut HashMap<String, u32>) -> ETerm {
        match t {
            Term::Var(v) => {
                let next = vars.len() as u32;
                ETerm::Var(*vars.entry(v.clone()).or_insert(next))
            }
            Term::App(f, args) => {
                let id = self.intern(f);
                ETerm::App(id, args.iter().map(|a| self.import_term(a, vars)).collect())
            }
        }
    }

    pub fn import(&mut self, c: &Clause) -> EClause {
        let mut vars = HashMap::new();
        let lits = c
            .literals
            .iter()
            .map(|l| ELit {
                pos: l.positive,
                pred: self.intern(&l.predicate),
                args: l.args.iter().map(|a| self.import_term(a, &mut vars)).collect(),
            })
            .collect();
        EClause::normalized(lits)
    }

    fn export_term(&self, t: &ETerm) -> Term {
        match t {
            ETerm::Var(v) => Term::Var(format!("X{}", v + 1)),
            ETerm::App(f, args) => Term::App(
                self.name(*f).to_string(),
                args.iter().map(|a| self.export_term(a)).collect(),
            ),
        }
    }

    pub fn export(&self, c: &EClause) -> Clause {
        Clause::new(
            c.lits
                .iter()
                .map(|l| {
                    Literal::new(
                        l.pos,
                        self.name(l.pred),
                        l.args.iter().map(|a| self.export_term(a)).collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Triangular substitution indexed by variable number.
struct Subst {
    bind: Vec<Option<ETerm>>,
}

impl Subst {
    fn new(n: u32) -> Self {
        Subst {
            bind: vec![None; n as usize],
        }
    }

    fn walk(&self, t: &ETerm) -> ETerm {
        let mut cur = t.clone();
        while let ETerm::Var(v) = cur {
            match &self.bind[v as usize] {
                Some(b) => cur = b.clone(),
                None => break,
            }
        }
        cur
    }

    fn occurs(&self, v: u32, t: &ETerm) -> bool {
        match self.walk(t) {
            ETerm::Var(w) => v == w,
            ETerm::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn unify(&mut self, a: &ETerm, b: &ETerm) -> bool {
        let a = self.walk(a);
        let b = self.walk(b);
        match (&a, &b) {
            (ETerm::Var(x), ETerm::Var(y)) if x == y => true,
            (ETerm::Var(x), _) => {
                if self.occurs(*x, &b) {
                    return false;
                }
                self.bind[*x as usize] = Some(b);
                true
            }
            (_, ETerm::Var(y)) => {
                if self.occurs(*y, &a) {
                    return false;
                }
                self.bind[*y as usize] = Some(a);
                true
            }
            (ETerm::App(f, fa), ETerm::App(g, ga)) => {
                f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(s, t)| self.unify(s, t))
            }
        }
    }

    fn unify_args(&mut self, a: &[ETerm], b: &[ETerm]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(s, t)| self.unify(s, t))
    }

    fn apply(&self, t: &ETerm) -> ETerm {
        match self.walk(t) {
            v @ ETerm::Var(_) => v,
            ETerm::App(f, args) => ETerm::App(f, args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    fn apply_lit(&self, l: &ELit) -> ELit {
        ELit {
            pos: l.pos,
            pred: l.pred,
            args: l.args.iter().map(|a| self.apply(a)).collect(),
        }
    }
}

/// Binary resolvent of `c1` on literal `i` with `c2` on literal `j`, if the
/// atoms unify. Polarity is the caller's concern.
pub(crate) fn resolvent(c1: &EClause, i: usize, c2: &EClause, j: usize) -> Option<EClause> {
    let shift = c1.nvars;
    let total = c1.nvars + c2.nvars;
    let c2: Vec<ELit> = c2
        .lits
        .iter()
        .map(|l| ELit {
            pos: l.pos,
            pred: l.pred,
            args: l.args.iter().map(|a| a.shifted(shift)).collect(),
        })
        .collect();
    let (a, b) = (&c1.lits[i], &c2[j]);
    if a.pred != b.pred {
        return None;
    }
    let mut s = Subst::new(total);
    if !s.unify_args(&a.args, &b.args) {
        return None;
    }
    let lits = c1
        .lits
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, l)| s.apply_lit(l))
        .chain(
            c2.iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, l)| s.apply_lit(l)),
        )
        .collect();
    Some(EClause::normalized(lits))
}

/// Factor of `c` merging literals `i` and `j`, if their atoms unify.
pub(crate) fn factor_pair(c: &EClause, i: usize, j: usize) -> Option<EClause> {
    let (a, b) = (&c.lits[i], &c.lits[j]);
    if a.pos != b.pos || a.pred != b.pred {
        return None;
    }
    let mut s = Subst::new(c.nvars);
    if !s.unify_args(&a.args, &b.args) {
        return None;
    }
    let lits = c
        .lits
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, l)| s.apply_lit(l))
        .collect();
    Some(EClause::normalized(lits))
}

fn match_term(p: &ETerm, t: &ETerm, bind: &mut [Option<ETerm>], trail: &mut Vec<u32>) -> bool {
    match p {
        ETerm::Var(v) => match &bind[*v as usize] {
            Some(b) => b == t,
            None => {
                bind[*v as usize] = Some(t.clone());
                trail.push(*v);
                true
            }
        },
        ETerm::App(f, pa) => match t {
            ETerm::App(g, ta) if f == g && pa.len() == ta.len() => {
                pa.iter().zip(ta).all(|(x, y)| match_term(x, y, bind, trail))
            }
            _ => false,
        },
    }
}

/// True if a substitution maps `c` onto a sub-multiset of `d`.
pub(crate) fn subsumes(c: &EClause, d: &EClause) -> bool {
    if c.lits.len() > d.lits.len() || c.weight() > d.weight() {
        return false;
    }
    if c.mask() & !d.mask() != 0 {
        return false;
    }
    let mut order: Vec<usize> = (0..c.lits.len()).collect();
    order.sort_by_key(|&i| Reverse(c.lits[i].weight()));
    let mut bind = vec![None; c.nvars as usize];
    let mut used = vec![false; d.lits.len()];
    let mut trail = Vec::new();
    subsume_from(0, &order, c, d, &mut bind, &mut used, &mut trail)
}

fn subsume_from(
    k: usize,
    order: &[usize],
    c: &EClause,
    d: &EClause,
    bind: &mut [Option<ETerm>],
    used: &mut [bool],
    trail: &mut Vec<u32>,
) -> bool {
    let Some(&i) = order.get(k) else {
        return true;
    };
    let cl = &c.lits[i];
    for (j, dl) in d.lits.iter().enumerate() {
        if used[j] || dl.pos != cl.pos || dl.pred != cl.pred || dl.args.len() != cl.args.len() {
            continue;
        }
        let mark = trail.len();
        let ok = cl
            .args
            .iter()
            .zip(&dl.args)
            .all(|(p, t)| match_term(p, t, bind, trail));
        if ok {
            used[j] = true;
            if subsume_from(k + 1, order, c, d, bind, used, trail) {
                return true;
            }
            used[j] = false;
        }
        for v in trail.drain(mark..) {
            bind[v as usize] = None;
        }
    }
    false
}

/// Which inferences the loop performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Calculus {
    /// Every literal pair; used for generation so the graph records the
    /// natural one-step consequences.
    Unrestricted,
    /// Resolution with selection of the heaviest negative literal; clauses
    /// without negative literals resolve and factor on KBO-maximal literals.
    OrderedSelection,
}

#[derive(Clone, Debug)]
enum Origin {
    Input { name: String, role: Role },
    Inference { rule: &'static str, parents: Vec<usize> },
}

#[derive(Clone, Debug)]
struct Entry {
    clause: EClause,
    origin: Origin,
    /// Descends from the negated conjecture.
    goal: bool,
}

/// Passive-queue key: goal descendants are weighed at two thirds.
fn priority(weight: usize, goal: bool) -> usize {
    if goal {
        weight * 2
    } else {
        weight * 3
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Outcome {
    Refutation(usize),
    Saturated,
    Stopped(Limit),
}

pub(crate) struct Engine {
    calculus: Calculus,
    limits: ProverLimits,
    pub syms: Interner,
    entries: Vec<Entry>,
    passive: BinaryHeap<Reverse<(usize, usize)>>,
    active: Vec<usize>,
    /// (predicate, polarity) to (entry, literal) pairs eligible for resolution.
    index: HashMap<(u32, bool), Vec<(usize, usize)>>,
    seen: HashSet<EClause>,
    dropped: bool,
    started: Instant,
}

impl Engine {
    pub fn new(calculus: Calculus, limits: ProverLimits) -> Self {
        Engine {
            calculus,
            limits,
            syms: Interner::default(),
            entries: Vec::new(),
            passive: BinaryHeap::new(),
            active: Vec::new(),
            index: HashMap::new(),
            seen: HashSet::new(),
            dropped: false,
            started: Instant::now(),
        }
    }

    /// Adds an input clause. Returns the entry of the empty clause if the
    /// input is itself a contradiction.
    pub fn add_input(&mut self, name: &str, role: Role, clause: &Clause) -> Option<usize> {
        let ec = self.syms.import(clause);
        let id = self.entries.len();
        let weight = ec.weight();
        let fresh = !ec.is_tautology() && self.seen.insert(ec.clone());
        let empty = ec.lits.is_empty();
        let goal = role == Role::NegatedConjecture;
        self.entries.push(Entry {
            clause: ec,
            origin: Origin::Input {
                name: name.to_string(),
                role,
            },
            goal,
        });
        if fresh {
            self.passive.push(Reverse((priority(weight, goal), id)));
        }
        empty.then_some(id)
    }

    pub fn run(&mut self) -> Outcome {
        self.started = Instant::now();
        if let Some(id) = self.entries.iter().position(|e| e.clause.lits.is_empty()) {
            return Outcome::Refutation(id);
        }
        while let Some(Reverse((_, given))) = self.passive.pop() {
            if self.started.elapsed() > self.limits.timeout {
                return Outcome::Stopped(Limit::Timeout);
            }
            if self.forward_subsumed(&self.entries[given].clause) {
                continue;
            }
            if let Some(out) = self.activate(given) {
                return out;
            }
        }
        if self.dropped {
            Outcome::Stopped(Limit::MaxWeight)
        } else {
            Outcome::Saturated
        }
    }

    fn forward_subsumed(&self, c: &EClause) -> bool {
        self.active
            .iter()
            .any(|&a| subsumes(&self.entries[a].clause, c))
    }

    fn eligible(&self, c: &EClause) -> Vec<usize> {
        match self.calculus {
            Calculus::Unrestricted => (0..c.lits.len()).collect(),
            Calculus::OrderedSelection => {
                let atoms: Vec<ETerm> = c.lits.iter().map(ELit::atom).collect();
                // no selection when a positive literal dominates every negative one
                let dominated = c.lits.iter().enumerate().any(|(i, l)| {
                    l.pos
                        && c.lits
                            .iter()
                            .enumerate()
                            .all(|(j, m)| m.pos || kbo_gt(&self.syms, &atoms[i], &atoms[j]))
                });
                let selected = c
                    .lits
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| !l.pos)
                    .max_by(|(i, a), (j, b)| a.weight().cmp(&b.weight()).then(j.cmp(i)))
                    .map(|(i, _)| i)
                    .filter(|_| !dominated);
                if let Some(i) = selected {
                    return vec![i];
                }
                (0..atoms.len())
                    .filter(|&i| {
                        !atoms
                            .iter()
                            .enumerate()
                            .any(|(j, other)| j != i && kbo_gt(&self.syms, other, &atoms[i]))
                    })
                    .collect()
            }
        }
    }

    fn activate(&mut self, given: usize) -> Option<Outcome> {
        let clause = self.entries[given].clause.clone();
        let eligible = self.eligible(&clause);
        self.active.push(given);
        for &i in &eligible {
            let l = &clause.lits[i];
            self.index.entry((l.pred, l.pos)).or_default().push((given, i));
        }

        let factorable: Vec<(usize, usize)> = match self.calculus {
            Calculus::Unrestricted => (0..clause.lits.len())
                .flat_map(|i| (i + 1..clause.lits.len()).map(move |j| (i, j)))
                .collect(),
            Calculus::OrderedSelection if clause.lits.iter().all(|l| l.pos) => eligible
                .iter()
                .flat_map(|&i| (0..clause.lits.len()).filter(move |&j| j != i).map(move |j| (i, j)))
                .collect(),
            Calculus::OrderedSelection => Vec::new(),
        };
        for (i, j) in factorable {
            if let Some(f) = factor_pair(&clause, i, j) {
                if let Some(out) = self.add_derived(f, "factoring", vec![given]) {
                    return Some(out);
                }
            }
        }

        for &i in &eligible {
            let l = &clause.lits[i];
            let partners = self.index.get(&(l.pred, !l.pos)).cloned().unwrap_or_default();
            for (p, j) in partners {
                let other = self.entries[p].clause.clone();
                if let Some(r) = resolvent(&clause, i, &other, j) {
                    if let Some(out) = self.add_derived(r, "resolution", vec![given, p]) {
                        return Some(out);
                    }
                }
            }
        }
        None
    }

    fn add_derived(&mut self, c: EClause, rule: &'static str, parents: Vec<usize>) -> Option<Outcome> {
        let empty = c.lits.is_empty();
        if !empty {
            if c.is_tautology() || self.seen.contains(&c) {
                return None;
            }
            let weight = c.weight();
            if weight > self.limits.max_weight {
                self.dropped = true;
                return None;
            }
            if self.forward_subsumed(&c) {
                return None;
            }
        }
        let id = self.entries.len();
        let weight = c.weight();
        let goal = parents.iter().any(|&p| self.entries[p].goal);
        self.seen.insert(c.clone());
        self.entries.push(Entry {
            clause: c,
            origin: Origin::Inference { rule, parents },
            goal,
        });
        if empty {
            return Some(Outcome::Refutation(id));
        }
        self.passive.push(Reverse((priority(weight, goal), id)));
        if self.entries.len() >= self.limits.max_clauses {
            return Some(Outcome::Stopped(Limit::MaxClauses));
        }
        None
    }

    fn names(&self) -> Vec<String> {
        let taken: HashSet<&str> = self
            .entries
            .iter()
            .filter_map(|e| match &e.origin {
                Origin::Input { name, .. } => Some(name.as_str()),
                Origin::Inference { .. } => None,
            })
            .collect();
        self.entries
            .iter()
            .enumerate()
            .map(|(id, e)| match &e.origin {
                Origin::Input { name, .. } => name.clone(),
                Origin::Inference { .. } => {
                    let mut n = format!("c_{id}");
                    while taken.contains(n.as_str()) {
                        n.push('_');
                    }
                    n
                }
            })
            .collect()
    }

    fn record(&self, id: usize, names: &[String]) -> DerivationRecord {
        let e = &self.entries[id];
        let (role, parents, rule) = match &e.origin {
            Origin::Input { role, .. } => (*role, Vec::new(), role.as_tptp().to_string()),
            Origin::Inference { rule, parents } => (
                Role::Derived,
                parents.iter().map(|&p| names[p].clone()).collect(),
                rule.to_string(),
            ),
        };
        DerivationRecord {
            name: names[id].clone(),
            role,
            clause: self.syms.export(&e.clause),
            parents,
            rule,
        }
    }

    /// Every entry in creation order.
    pub fn records(&self) -> Vec<DerivationRecord> {
        let names = self.names();
        (0..self.entries.len()).map(|id| self.record(id, &names)).collect()
    }

    /// The entries `id` depends on, in creation order, ending at `id`.
    pub fn trace(&self, id: usize) -> Vec<DerivationRecord> {
        let mut keep = vec![false; self.entries.len()];
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut keep[n], true) {
                continue;
            }
            if let Origin::Inference { parents, .. } = &self.entries[n].origin {
                stack.extend(parents);
            }
        }
        let names = self.names();
        (0..=id).filter(|&n| keep[n]).map(|n| self.record(n, &names)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_clause;

    fn ec(syms: &mut Interner, s: &str) -> EClause {
        syms.import(&parse_clause(s).unwrap())
    }

    #[test]
    fn import_normalizes_and_merges() {
        let mut s = Interner::default();
        let c = ec(&mut s, "(p(Y)|q(Y,Z)|p(Y))");
        assert_eq!(c.lits.len(), 2);
        assert_eq!(c.nvars, 2);
        assert_eq!(s.export(&c).to_string(), "(p(X1)|q(X1,X2))");
    }

    #[test]
    fn occurs_check_blocks_cyclic_unifier() {
        let mut s = Interner::default();
        let a = ec(&mut s, "(p(X1,f(X1)))");
        let b = ec(&mut s, "(~p(X1,X1))");
        assert!(resolvent(&a, 0, &b, 0).is_none());
    }

    #[test]
    fn subsumption_is_multiset_injective() {
        let mut s = Interner::default();
        let pp = ec(&mut s, "(p(X1)|p(X2))");
        let p = ec(&mut s, "(p(a))");
        let pab = ec(&mut s, "(p(a)|p(b))");
        assert!(subsumes(&pp, &pab));
        assert!(!subsumes(&pp, &p));
        assert!(subsumes(&p, &pab));
    }

    #[test]
    fn subsumption_respects_rigid_target_variables() {
        let mut s = Interner::default();
        let c = ec(&mut s, "(p(X1,X1))");
        let d = ec(&mut s, "(p(X1,X2))");
        assert!(!subsumes(&c, &d));
        assert!(subsumes(&d, &c));
    }
}
