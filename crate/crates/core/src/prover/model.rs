//! Finite model search: flatten, ground over a domain of size n, solve with
//! SAT, then check the decoded model against the original clauses.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use varisat::{ExtendFormula, Lit, Solver, Var};

use crate::formula::{Clause, Term, EQUALITY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelLimits {
    /// Largest domain tried; 0 disables the search.
    pub max_size: usize,
    /// Ground clauses allowed per domain size.
    pub max_ground_clauses: usize,
}

impl Default for ModelLimits {
    fn default() -> Self {
        ModelLimits {
            max_size: 4,
            max_ground_clauses: 200_000,
        }
    }
}

/// Interpretation over `0..size`. Tables are indexed by the argument tuple
/// read as a base-`size` number, first argument most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteModel {
    pub size: usize,
    pub functions: BTreeMap<(String, usize), Vec<usize>>,
    pub predicates: BTreeMap<(String, usize), Vec<bool>>,
}

fn tuple_index(args: &[usize], n: usize) -> usize {
    args.iter().fold(0, |acc, &a| acc * n + a)
}

impl FiniteModel {
    fn eval(&self, t: &Term, env: &HashMap<&str, usize>) -> usize {
        match t {
            Term::Var(v) => env[v.as_str()],
            Term::App(f, args) => {
                let vals: Vec<usize> = args.iter().map(|a| self.eval(a, env)).collect();
                self.functions[&(f.clone(), args.len())][tuple_index(&vals, self.size)]
            }
        }
    }

    /// Whether every instance of `c` over the domain is true.
    pub fn satisfies(&self, c: &Clause) -> bool {
        let vars = c.variables();
        let mut digits = vec![0usize; vars.len()];
        loop {
            let env: HashMap<&str, usize> = vars.iter().copied().zip(digits.iter().copied()).collect();
            let holds = c.literals.iter().any(|l| {
                let vals: Vec<usize> = l.args.iter().map(|a| self.eval(a, &env)).collect();
                let atom = if l.predicate == EQUALITY {
                    vals[0] == vals[1]
                } else {
                    self.predicates[&(l.predicate.clone(), vals.len())][tuple_index(&vals, self.size)]
                };
                atom == l.positive
            });
            if !holds {
                return false;
            }
            if !advance(&mut digits, self.size) {
                return true;
            }
        }
    }
}

/// Next tuple in base `n`; false after the last one.
fn advance(digits: &mut [usize], n: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < n {
            return true;
        }
        *d = 0;
    }
    false
}

#[derive(Clone, Debug)]
enum FlatLit {
    Pred { positive: bool, pred: usize, args: Vec<usize> },
    Eq { positive: bool, a: usize, b: usize },
    /// `f(args) != result`.
    NotFun { fun: usize, args: Vec<usize>, result: usize },
}

struct FlatClause {
    nvars: usize,
    lits: Vec<FlatLit>,
}

#[derive(Default)]
struct Signature {
    funs: Vec<(String, usize)>,
    preds: Vec<(String, usize)>,
    fun_ids: HashMap<(String, usize), usize>,
    pred_ids: HashMap<(String, usize), usize>,
}

impl Signature {
    fn fun(&mut self, name: &str, arity: usize) -> usize {
        let key = (name.to_string(), arity);
        if let Some(&i) = self.fun_ids.get(&key) {
            return i;
        }
        self.funs.push(key.clone());
        self.fun_ids.insert(key, self.funs.len() - 1);
        self.funs.len() - 1
    }

    fn pred(&mut self, name: &str, arity: usize) -> usize {
        let key = (name.to_string(), arity);
        if let Some(&i) = self.pred_ids.get(&key) {
            return i;
        }
        self.preds.push(key.clone());
        self.pred_ids.insert(key, self.preds.len() - 1);
        self.preds.len() - 1
    }
}

struct Flattener<'a> {
    sig: &'a mut Signature,
    vars: HashMap<String, usize>,
    terms: HashMap<Term, usize>,
    defs: Vec<FlatLit>,
    nvars: usize,
}

impl Flattener<'_> {
    fn slot(&mut self, t: &Term) -> usize {
        match t {
            Term::Var(v) => {
                if let Some(&i) = self.vars.get(v) {
                    return i;
                }
                self.vars.insert(v.clone(), self.nvars);
                self.nvars += 1;
                self.nvars - 1
            }
            Term::App(f, args) => {
                if let Some(&i) = self.terms.get(t) {
                    return i;
                }
                let slots: Vec<usize> = args.iter().map(|a| self.slot(a)).collect();
                let fun = self.sig.fun(f, args.len());
                let result = self.nvars;
                self.nvars += 1;
                self.defs.push(FlatLit::NotFun { fun, args: slots, result });
                self.terms.insert(t.clone(), result);
                result
            }
        }
    }
}

fn flatten(c: &Clause, sig: &mut Signature) -> FlatClause {
    let mut fl = Flattener {
        sig,
        vars: HashMap::new(),
        terms: HashMap::new(),
        defs: Vec::new(),
        nvars: 0,
    };
    let mut lits = Vec::new();
    for l in &c.literals {
        let args: Vec<usize> = l.args.iter().map(|a| fl.slot(a)).collect();
        if l.predicate == EQUALITY {
            lits.push(FlatLit::Eq {
                positive: l.positive,
                a: args[0],
                b: args[1],
            });
        } else {
            let pred = fl.sig.pred(&l.predicate, args.len());
            lits.push(FlatLit::Pred {
                positive: l.positive,
                pred,
                args,
            });
        }
    }
    lits.append(&mut fl.defs);
    FlatClause { nvars: fl.nvars, lits }
}

struct Encoding {
    n: usize,
    fun_base: Vec<usize>,
    pred_base: Vec<usize>,
}

impl Encoding {
    fn new(sig: &Signature, n: usize) -> (Self, usize) {
        let mut next = 0;
        let mut fun_base = Vec::new();
        for (_, arity) in &sig.funs {
            fun_base.push(next);
            next += n.pow(*arity as u32 + 1);
        }
        let mut pred_base = Vec::new();
        for (_, arity) in &sig.preds {
            pred_base.push(next);
            next += n.pow(*arity as u32);
        }
        (Encoding { n, fun_base, pred_base }, next)
    }

    fn fun_var(&self, fun: usize, args: &[usize], value: usize) -> Var {
        Var::from_index(self.fun_base[fun] + tuple_index(args, self.n) * self.n + value)
    }

    fn pred_var(&self, pred: usize, args: &[usize]) -> Var {
        Var::from_index(self.pred_base[pred] + tuple_index(args, self.n))
    }
}

fn ground_count(flat: &[FlatClause], n: usize, cap: usize) -> Option<usize> {
    let mut total = 0usize;
    for f in flat {
        total = total.checked_add(n.checked_pow(f.nvars as u32)?)?;
        if total > cap {
            return None;
        }
    }
    Some(total)
}

fn solve_size(sig: &Signature, flat: &[FlatClause], n: usize) -> Option<FiniteModel> {
    let (enc, nvars) = Encoding::new(sig, n);
    let mut solver = Solver::new();
    for _ in 0..nvars {
        solver.new_var();
    }
    // each function is total and single-valued
    for (fun, (_, arity)) in sig.funs.iter().enumerate() {
        let mut args = vec![0usize; *arity];
        loop {
            let vals: Vec<Lit> = (0..n).map(|v| enc.fun_var(fun, &args, v).positive()).collect();
            solver.add_clause(&vals);
            for i in 0..n {
                for j in i + 1..n {
                    solver.add_clause(&[!vals[i], !vals[j]]);
                }
            }
            if !advance(&mut args, n) {
                break;
            }
        }
    }
    // the i-th constant takes a value no greater than i
    let constants = sig.funs.iter().enumerate().filter(|(_, (_, a))| *a == 0);
    for (rank, (fun, _)) in constants.enumerate() {
        for v in rank + 1..n {
            solver.add_clause(&[enc.fun_var(fun, &[], v).negative()]);
        }
    }
    let mut clause = Vec::new();
    for f in flat {
        let mut digits = vec![0usize; f.nvars];
        loop {
            clause.clear();
            let mut satisfied = false;
            for l in &f.lits {
                match l {
                    FlatLit::Eq { positive, a, b } => {
                        if (digits[*a] == digits[*b]) == *positive {
                            satisfied = true;
                            break;
                        }
                    }
                    FlatLit::Pred { positive, pred, args } => {
                        let vals: Vec<usize> = args.iter().map(|&s| digits[s]).collect();
                        clause.push(enc.pred_var(*pred, &vals).lit(*positive));
                    }
                    FlatLit::NotFun { fun, args, result } => {
                        let vals: Vec<usize> = args.iter().map(|&s| digits[s]).collect();
                        clause.push(enc.fun_var(*fun, &vals, digits[*result]).negative());
                    }
                }
            }
            if !satisfied {
                solver.add_clause(&clause);
            }
            if !advance(&mut digits, n) {
                break;
            }
        }
    }
    if !solver.solve().ok()? {
        return None;
    }
    let truth: Vec<bool> = {
        let mut t = vec![false; nvars];
        for l in solver.model()? {
            t[l.index()] = l.is_positive();
        }
        t
    };
    let mut functions = BTreeMap::new();
    for (fun, key) in sig.funs.iter().enumerate() {
        let cells = n.pow(key.1 as u32);
        let table = (0..cells)
            .map(|cell| {
                (0..n)
                    .find(|&v| truth[enc.fun_base[fun] + cell * n + v])
                    .expect("exactly one value")
            })
            .collect();
        functions.insert(key.clone(), table);
    }
    let mut predicates = BTreeMap::new();
    for (pred, key) in sig.preds.iter().enumerate() {
        let cells = n.pow(key.1 as u32);
        let base = enc.pred_base[pred];
        predicates.insert(key.clone(), truth[base..base + cells].to_vec());
    }
    Some(FiniteModel {
        size: n,
        functions,
        predicates,
    })
}

/// Smallest model of `clauses` with at most `limits.max_size` elements,
/// or `None` if there is none within the limits.
pub fn find_model(clauses: &[Clause], limits: ModelLimits) -> Option<FiniteModel> {
    find_model_in(clauses, 1..=limits.max_size, limits.max_ground_clauses)
}

/// As [`find_model`], trying only the sizes in `sizes`.
pub fn find_model_in(
    clauses: &[Clause],
    sizes: std::ops::RangeInclusive<usize>,
    max_ground_clauses: usize,
) -> Option<FiniteModel> {
    let mut sig = Signature::default();
    let flat: Vec<FlatClause> = clauses.iter().map(|c| flatten(c, &mut sig)).collect();
    if flat.iter().any(|f| f.lits.is_empty()) {
        return None;
    }
    for n in sizes {
        ground_count(&flat, n, max_ground_clauses)?;
        if let Some(m) = solve_size(&sig, &flat, n) {
            let ok = clauses.iter().all(|c| m.satisfies(c));
            debug_assert!(ok, "decoded model violates an input clause");
            return ok.then_some(m);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_clause;

    fn cs(xs: &[&str]) -> Vec<Clause> {
        xs.iter().map(|s| parse_clause(s).unwrap()).collect()
    }

    #[test]
    fn unsatisfiable_has_no_model() {
        assert!(find_model(&cs(&["(p(a))", "(~p(X1))"]), ModelLimits::default()).is_none());
        assert!(find_model(&cs(&["($false)"]), ModelLimits::default()).is_none());
    }

    #[test]
    fn one_element_suffices_for_a_chain() {
        let m = find_model(&cs(&["(p(a))", "(p(f(X1))|~p(X1))", "(~q(a))"]), ModelLimits::default()).unwrap();
        assert_eq!(m.size, 1);
    }

    #[test]
    fn distinctness_forces_two_elements() {
        let c = cs(&["(a!=b)", "(p(X1)|~p(X1))"]);
        let m = find_model(&c, ModelLimits::default()).unwrap();
        assert_eq!(m.size, 2);
        assert!(c.iter().all(|x| m.satisfies(x)));
    }

    #[test]
    fn successor_without_fixpoint_needs_two() {
        // f has no fixpoint and p alternates
        let c = cs(&["(f(X1)!=X1)", "(p(X1)|p(f(X1)))", "(~p(X1)|~p(f(X1)))"]);
        let m = find_model(&c, ModelLimits::default()).unwrap();
        assert_eq!(m.size, 2);
    }

    #[test]
    fn size_cap_is_respected() {
        let c = cs(&["(a!=b)", "(a!=c)", "(b!=c)"]);
        let small = ModelLimits {
            max_size: 2,
            ..ModelLimits::default()
        };
        assert!(find_model(&c, small).is_none());
        assert_eq!(find_model(&c, ModelLimits::default()).unwrap().size, 3);
    }

    #[test]
    fn ground_cap_gives_up() {
        let c = cs(&["(p(X1,X2,X3,X4,X5,X6,X7,X8))"]);
        let tight = ModelLimits {
            max_size: 4,
            max_ground_clauses: 100,
        };
        // size 1 fits in the budget
        assert_eq!(find_model(&c, tight).unwrap().size, 1);
        let c = cs(&["(p(X1,X2,X3,X4,X5,X6,X7,X8))", "(a!=b)"]);
        assert!(find_model(&c, tight).is_none());
    }
}
