//! Refutation checker for CNF problems: a connection tableau searched by
//! iterative deepening on path length, with a finite counter-model search
//! for the satisfiable side.

use std::collections::HashMap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use rc_core::formula::{Clause, Term, EQUALITY};
use rc_core::prover::{equality_axioms, find_model_in};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Unsatisfiable,
    Satisfiable,
    GaveUp,
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub timeout: Duration,
    /// Longest branch tried by the deepening loop.
    pub max_depth: usize,
    /// Largest counter-model domain; 0 disables the model search.
    pub model_size: usize,
    pub max_ground_clauses: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            timeout: Duration::from_secs(5),
            max_depth: 40,
            model_size: 4,
            max_ground_clauses: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum T {
    V(usize),
    F(u32, Vec<T>),
}

impl T {
    fn shifted(&self, by: usize) -> T {
        match self {
            T::V(v) => T::V(v + by),
            T::F(f, args) => T::F(*f, args.iter().map(|a| a.shifted(by)).collect()),
        }
    }
}

#[derive(Clone, Debug)]
struct Lit {
    pos: bool,
    pred: u32,
    args: Vec<T>,
}

impl Lit {
    fn shifted(&self, by: usize) -> Lit {
        Lit {
            pos: self.pos,
            pred: self.pred,
            args: self.args.iter().map(|a| a.shifted(by)).collect(),
        }
    }
}

struct MClause {
    lits: Vec<Lit>,
    vars: usize,
}

#[derive(Default)]
struct Symbols(HashMap<String, u32>);

impl Symbols {
    fn id(&mut self, s: &str) -> u32 {
        let n = self.0.len() as u32;
        *self.0.entry(s.to_string()).or_insert(n)
    }
}

fn convert(c: &Clause, syms: &mut Symbols) -> MClause {
    fn term(t: &Term, syms: &mut Symbols, vars: &mut HashMap<String, usize>) -> T {
        match t {
            Term::Var(v) => {
                let n = vars.len();
                T::V(*vars.entry(v.clone()).or_insert(n))
            }
            Term::App(f, args) => T::F(syms.id(f), args.iter().map(|a| term(a, syms, vars)).collect()),
        }
    }
    let mut vars = HashMap::new();
    let lits = c
        .literals
        .iter()
        .map(|l| Lit {
            pos: l.positive,
            pred: syms.id(&format!("{}/{}", l.predicate, l.args.len())),
            args: l.args.iter().map(|a| term(a, syms, &mut vars)).collect(),
        })
        .collect();
    MClause { lits, vars: vars.len() }
}

struct PathNode {
    lit: Lit,
    next: Path,
}

type Path = Option<Rc<PathNode>>;

fn path_iter(p: &Path) -> impl Iterator<Item = &Lit> {
    let mut cur = p.as_deref();
    std::iter::from_fn(move || {
        let n = cur?;
        cur = n.next.as_deref();
        Some(&n.lit)
    })
}

struct Search<'a> {
    matrix: &'a [MClause],
    /// (polarity, predicate) to (clause, literal).
    index: HashMap<(bool, u32), Vec<(usize, usize)>>,
    bind: Vec<Option<T>>,
    trail: Vec<usize>,
    deadline: Instant,
    steps: u64,
    aborted: bool,
    cut_off: bool,
}

type Cont<'k, 'a> = &'k mut dyn FnMut(&mut Search<'a>) -> bool;

impl<'a> Search<'a> {
    fn new(matrix: &'a [MClause], deadline: Instant) -> Self {
        let mut index: HashMap<(bool, u32), Vec<(usize, usize)>> = HashMap::new();
        for (ci, c) in matrix.iter().enumerate() {
            for (li, l) in c.lits.iter().enumerate() {
                index.entry((l.pos, l.pred)).or_default().push((ci, li));
            }
        }
        Search {
            matrix,
            index,
            bind: Vec::new(),
            trail: Vec::new(),
            deadline,
            steps: 0,
            aborted: false,
            cut_off: false,
        }
    }

    fn deref<'t>(&'t self, mut t: &'t T) -> &'t T {
        while let T::V(v) = t {
            match &self.bind[*v] {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: usize, t: &T) -> bool {
        match self.deref(t) {
            T::V(w) => *w == v,
            T::F(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn unify(&mut self, a: &T, b: &T) -> bool {
        let a = self.deref(a).clone();
        let b = self.deref(b).clone();
        match (&a, &b) {
            (T::V(x), T::V(y)) if x == y => true,
            (T::V(x), t) | (t, T::V(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.bind[*x] = Some(t.clone());
                self.trail.push(*x);
                true
            }
            (T::F(f, xs), T::F(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
        }
    }

    fn unify_args(&mut self, a: &Lit, b: &Lit) -> bool {
        a.pred == b.pred && a.args.iter().zip(&b.args).all(|(x, y)| self.unify(x, y))
    }

    fn same(&self, a: &T, b: &T) -> bool {
        match (self.deref(a), self.deref(b)) {
            (T::V(x), T::V(y)) => x == y,
            (T::F(f, xs), T::F(g, ys)) => f == g && xs.iter().zip(ys).all(|(x, y)| self.same(x, y)),
            _ => false,
        }
    }

    fn undo(&mut self, mark: usize) {
        for v in self.trail.drain(mark..) {
            self.bind[v] = None;
        }
    }

    fn tick(&mut self) -> bool {
        self.steps += 1;
        if self.steps.is_multiple_of(1024) && Instant::now() > self.deadline {
            self.aborted = true;
        }
        self.aborted
    }

    fn prove_lits(&mut self, lits: &[Lit], path: &Path, depth: usize, k: Cont<'_, 'a>) -> bool {
        match lits.split_first() {
            None => k(self),
            Some((first, rest)) => self.prove_lit(first, path, depth, &mut |s| s.prove_lits(rest, path, depth, k)),
        }
    }

    fn prove_lit(&mut self, lit: &Lit, path: &Path, depth: usize, k: Cont<'_, 'a>) -> bool {
        if self.tick() {
            return false;
        }
        for p in path_iter(path) {
            if p.pos == lit.pos && p.pred == lit.pred && p.args.iter().zip(&lit.args).all(|(x, y)| self.same(x, y)) {
                return false;
            }
        }
        for p in path_iter(path) {
            if p.pos != lit.pos && p.pred == lit.pred {
                let mark = self.trail.len();
                if self.unify_args(p, lit) && k(self) {
                    return true;
                }
                self.undo(mark);
                if self.aborted {
                    return false;
                }
            }
        }
        let partners = self.index.get(&(!lit.pos, lit.pred)).cloned().unwrap_or_default();
        for (ci, li) in partners {
            let clause = &self.matrix[ci];
            // unit extensions open no branch, so they ignore the bound
            if depth == 0 && clause.lits.len() > 1 {
                self.cut_off = true;
                continue;
            }
            let base = self.bind.len();
            self.bind.resize(base + clause.vars, None);
            let copy: Vec<Lit> = clause.lits.iter().map(|l| l.shifted(base)).collect();
            let mark = self.trail.len();
            if self.unify_args(lit, &copy[li]) {
                let rest: Vec<Lit> = copy
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != li)
                    .map(|(_, l)| l.clone())
                    .collect();
                let deeper = Some(Rc::new(PathNode {
                    lit: lit.clone(),
                    next: path.clone(),
                }));
                if self.prove_lits(&rest, &deeper, depth.saturating_sub(1), k) {
                    return true;
                }
            }
            self.undo(mark);
            self.bind.truncate(base);
            if self.aborted {
                return false;
            }
        }
        false
    }
}

/// Tries to close a tableau for `clauses`; `Some(false)` means the search
/// space was exhausted below the depth bound.
fn tableau(clauses: &[Clause], goals: &[usize], max_depth: usize, deadline: Instant) -> Option<bool> {
    let mut syms = Symbols::default();
    let matrix: Vec<MClause> = clauses.iter().map(|c| convert(c, &mut syms)).collect();
    if matrix.iter().any(|c| c.lits.is_empty()) {
        return Some(true);
    }
    // every unsatisfiable set has an all-negative clause in each minimal core
    let mut starts: Vec<usize> = goals.to_vec();
    starts.extend((0..matrix.len()).filter(|&i| matrix[i].lits.iter().all(|l| !l.pos) && !goals.contains(&i)));
    let mut search = Search::new(&matrix, deadline);
    for depth in 1..=max_depth {
        search.cut_off = false;
        for &s in &starts {
            let c = &matrix[s];
            search.bind.clear();
            search.trail.clear();
            search.bind.resize(c.vars, None);
            if search.prove_lits(&c.lits, &None, depth, &mut |_| true) {
                return Some(true);
            }
            if search.aborted {
                return None;
            }
        }
        if !search.cut_off {
            return Some(false);
        }
    }
    None
}

fn has_equality(clauses: &[Clause]) -> bool {
    clauses.iter().flat_map(|c| &c.literals).any(|l| l.predicate == EQUALITY)
}

/// Decides satisfiability of `clauses`. `goals` index the clauses that
/// came from a negated conjecture; they are tried first as start clauses.
pub fn refute(clauses: &[Clause], goals: &[usize], opts: Options) -> Status {
    const QUICK: usize = 2;
    let started = Instant::now();
    let quick = opts.model_size.min(QUICK);
    if quick > 0 && find_model_in(clauses, 1..=quick, opts.max_ground_clauses).is_some() {
        return Status::Satisfiable;
    }
    let mut all = clauses.to_vec();
    if has_equality(clauses) {
        all.extend(equality_axioms(clauses));
    }
    let budget = if opts.model_size > QUICK { opts.timeout.mul_f64(0.7) } else { opts.timeout };
    match tableau(&all, goals, opts.max_depth, started + budget) {
        Some(true) => return Status::Unsatisfiable,
        Some(false) => return Status::Satisfiable,
        None => {}
    }
    if opts.model_size > QUICK && find_model_in(clauses, QUICK + 1..=opts.model_size, opts.max_ground_clauses).is_some()
    {
        return Status::Satisfiable;
    }
    Status::GaveUp
}
