//! Logical ground truth: a small resolution prover plus adapters for
//! external TPTP provers.

mod engine;
mod external;
mod model;
mod order;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{AnnotatedClause, Clause, Literal, Role, Term};

pub use engine::Calculus;
pub use model::{find_model, find_model_in, FiniteModel, ModelLimits};
use engine::{Engine, Interner, Outcome};
pub use external::{
    check_entailment_external, parse_szs_status, parse_tstp_derivation, run_external_saturation,
    write_problem, Dialect, ExternalOracle, ExternalProverConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProverLimits {
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_clauses: usize,
    pub max_weight: usize,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for ProverLimits {
    fn default() -> Self {
        ProverLimits {
            timeout: Duration::from_secs(5),
            max_clauses: 4000,
            max_weight: 40,
        }
    }
}

impl ProverLimits {
    pub fn validate(&self) -> Result<(), ProverError> {
        if self.timeout.is_zero() || self.max_clauses == 0 || self.max_weight == 0 {
            return Err(ProverError::Input("prover limits must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Timeout,
    MaxClauses,
    MaxWeight,
    /// Any other non-definite prover status, such as `GaveUp`.
    Status(String),
}

/// One step of a derivation log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationRecord {
    pub name: String,
    pub role: Role,
    pub clause: Clause,
    pub parents: Vec<String>,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Carries the refutation when the prover produced one.
    Entailed(Option<Vec<DerivationRecord>>),
    NotEntailed,
    ResourceOut(Limit),
}

impl Verdict {
    pub fn is_entailed(&self) -> bool {
        matches!(self, Verdict::Entailed(_))
    }

    pub fn is_not_entailed(&self) -> bool {
        matches!(self, Verdict::NotEntailed)
    }

    /// `Some(label)` for definite verdicts.
    pub fn definite(&self) -> Option<bool> {
        match self {
            Verdict::Entailed(_) => Some(true),
            Verdict::NotEntailed => Some(false),
            Verdict::ResourceOut(_) => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationOutput {
    pub records: Vec<DerivationRecord>,
    /// False when a limit stopped the loop before the closure was reached.
    pub complete: bool,
}

#[derive(Debug, Error)]
pub enum ProverError {
    #[error("prover executable {0} not found")]
    MissingExecutable(std::path::PathBuf),
    #[error("failed to launch {exe}: {source}")]
    Spawn {
        exe: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("prover i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse prover output at line {line}: {message}\n  {text}")]
    Parse {
        line: usize,
        text: String,
        message: String,
    },
    #[error("invalid prover input: {0}")]
    Input(String),
}

/// All binary resolvents of `c1` and `c2`, variables renamed apart.
pub fn resolve(c1: &Clause, c2: &Clause) -> Vec<Clause> {
    let mut syms = Interner::default();
    let a = syms.import(c1);
    let b = syms.import(c2);
    let mut out = Vec::new();
    for (i, la) in a.lits.iter().enumerate() {
        for (j, lb) in b.lits.iter().enumerate() {
            if la.pos == lb.pos {
                continue;
            }
            if let Some(r) = engine::resolvent(&a, i, &b, j) {
                if !r.is_tautology() {
                    out.push(syms.export(&r));
                }
            }
        }
    }
    dedup_by_key(out)
}

/// All factors obtained by merging one unifiable same-polarity pair.
pub fn factor(c: &Clause) -> Vec<Clause> {
    let mut syms = Interner::default();
    let a = syms.import(c);
    let mut out = Vec::new();
    for i in 0..a.lits.len() {
        for j in i + 1..a.lits.len() {
            if let Some(f) = engine::factor_pair(&a, i, j) {
                out.push(syms.export(&f));
            }
        }
    }
    dedup_by_key(out)
}

fn dedup_by_key(cs: Vec<Clause>) -> Vec<Clause> {
    let mut seen = BTreeSet::new();
    cs.into_iter()
        .filter(|c| seen.insert(c.canonical_key()))
        .collect()
}

/// True if some clause of `store` subsumes `c`.
pub fn subsumed<'a>(c: &Clause, store: impl IntoIterator<Item = &'a Clause>) -> bool {
    let mut syms = Interner::default();
    let target = syms.import(c);
    store
        .into_iter()
        .any(|s| engine::subsumes(&syms.import(s), &target))
}

fn collect_signature(t: &Term, funcs: &mut BTreeMap<String, usize>) {
    if let Term::App(f, args) = t {
        funcs.entry(f.clone()).or_insert(args.len());
        args.iter().for_each(|a| collect_signature(a, funcs));
    }
}

/// Reflexivity, symmetry, transitivity and congruence for every function
/// and predicate symbol occurring in `clauses`.
pub fn equality_axioms<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> Vec<Clause> {
    let mut funcs = BTreeMap::new();
    let mut preds = BTreeMap::new();
    for c in clauses {
        for l in &c.literals {
            if !l.is_equality() {
                preds.entry(l.predicate.clone()).or_insert(l.args.len());
            }
            l.args.iter().for_each(|a| collect_signature(a, &mut funcs));
        }
    }
    let v = |n: usize| Term::var(format!("X{n}"));
    let eq = |p: bool, a: Term, b: Term| Literal::equality(p, a, b);
    let mut out = vec![
        Clause::new(vec![eq(true, v(1), v(1))]),
        Clause::new(vec![eq(false, v(1), v(2)), eq(true, v(2), v(1))]),
        Clause::new(vec![
            eq(false, v(1), v(2)),
            eq(false, v(2), v(3)),
            eq(true, v(1), v(3)),
        ]),
    ];
    let congruent_args = |arity: usize, pos: usize| {
        let base: Vec<Term> = (0..arity).map(|k| v(k + 3)).collect();
        let mut lhs = base.clone();
        let mut rhs = base;
        lhs[pos] = v(1);
        rhs[pos] = v(2);
        (lhs, rhs)
    };
    for (f, &arity) in &funcs {
        for pos in 0..arity {
            let (lhs, rhs) = congruent_args(arity, pos);
            out.push(Clause::new(vec![
                eq(false, v(1), v(2)),
                eq(true, Term::app(f.as_str(), lhs), Term::app(f.as_str(), rhs)),
            ]));
        }
    }
    for (p, &arity) in &preds {
        for pos in 0..arity {
            let (lhs, rhs) = congruent_args(arity, pos);
            out.push(Clause::new(vec![
                eq(false, v(1), v(2)),
                Literal::new(false, p.as_str(), lhs),
                Literal::new(true, p.as_str(), rhs),
            ]));
        }
    }
    out
}

/// Negation of a CNF clause: its variables become fresh constants and each
/// literal is negated into its own unit clause.
pub fn negate_conjecture<'a>(
    conjecture: &Clause,
    context: impl IntoIterator<Item = &'a Clause>,
) -> Vec<Clause> {
    let mut used: BTreeSet<String> = conjecture.symbols().into_iter().map(String::from).collect();
    for c in context {
        used.extend(c.symbols().into_iter().map(String::from));
    }
    let mut map = HashMap::new();
    let mut next = 1;
    for v in conjecture.variables() {
        let mut name = format!("esk_goal_{next}");
        while used.contains(&name) {
            next += 1;
            name = format!("esk_goal_{next}");
        }
        used.insert(name.clone());
        next += 1;
        map.insert(v.to_string(), Term::constant(name));
    }
    fn ground(t: &Term, map: &HashMap<String, Term>) -> Term {
        match t {
            Term::Var(v) => map[v].clone(),
            Term::App(f, args) => Term::app(f.as_str(), args.iter().map(|a| ground(a, map)).collect()),
        }
    }
    conjecture
        .literals
        .iter()
        .map(|l| {
            let g = Literal::new(
                !l.positive,
                l.predicate.as_str(),
                l.args.iter().map(|a| ground(a, &map)).collect(),
            );
            Clause::new(vec![g])
        })
        .collect()
}

/// Refutation attempt on `premises` plus the negated conjecture.
pub fn prove_internal(premises: &[Clause], conjecture: &Clause, limits: ProverLimits) -> Verdict {
    let mut engine = Engine::new(Calculus::OrderedSelection, limits);
    let mut empty = None;
    for (i, p) in premises.iter().enumerate() {
        empty = empty.or(engine.add_input(&format!("p_{}", i + 1), Role::Axiom, p));
    }
    let negated = negate_conjecture(conjecture, premises);
    for (i, n) in negated.iter().enumerate() {
        empty = empty.or(engine.add_input(&format!("goal_{}", i + 1), Role::NegatedConjecture, n));
    }
    let uses_equality =
        conjecture.has_equality() || premises.iter().any(|p| p.has_equality());
    if uses_equality {
        let all: Vec<&Clause> = premises.iter().chain(negated.iter()).collect();
        for (i, ax) in equality_axioms(all).iter().enumerate() {
            engine.add_input(&format!("eq_{}", i + 1), Role::Axiom, ax);
        }
    }
    if let Some(id) = empty {
        return Verdict::Entailed(Some(engine.trace(id)));
    }
    match engine.run() {
        Outcome::Refutation(id) => Verdict::Entailed(Some(engine.trace(id))),
        Outcome::Saturated => Verdict::NotEntailed,
        Outcome::Stopped(limit) => Verdict::ResourceOut(limit),
    }
}

/// [`prove_internal`], then a finite countermodel search when resolution
/// hits a limit. A model of the premises and the negated conjecture
/// certifies non-entailment.
pub fn decide_internal(premises: &[Clause], conjecture: &Clause, limits: ProverLimits, models: ModelLimits) -> Verdict {
    const QUICK: usize = 2;
    let mut all = premises.to_vec();
    all.extend(negate_conjecture(conjecture, premises));
    let quick = models.max_size.min(QUICK);
    if quick > 0 && find_model_in(&all, 1..=quick, models.max_ground_clauses).is_some() {
        return Verdict::NotEntailed;
    }
    let v = prove_internal(premises, conjecture, limits);
    if !matches!(v, Verdict::ResourceOut(_)) || models.max_size <= QUICK {
        return v;
    }
    match find_model_in(&all, QUICK + 1..=models.max_size, models.max_ground_clauses) {
        Some(_) => Verdict::NotEntailed,
        None => v,
    }
}

/// Goal-free saturation; the returned log starts with the axioms.
pub fn saturate_internal(axioms: &[AnnotatedClause], limits: ProverLimits) -> SaturationOutput {
    let mut engine = Engine::new(Calculus::Unrestricted, limits);
    for a in axioms {
        engine.add_input(&a.name, Role::Axiom, &a.clause);
    }
    let complete = matches!(engine.run(), Outcome::Saturated);
    SaturationOutput {
        records: engine.records(),
        complete,
    }
}

/// Anything that can decide `premises ⊨ conjecture`.
pub trait EntailmentOracle: Send + Sync {
    fn check(&self, premises: &[Clause], conjecture: &Clause) -> Result<Verdict, ProverError>;

    /// Short identifier recorded in dataset manifests.
    fn describe(&self) -> String;
}

/// [`decide_internal`] behind a memo table. Premises are sorted and
/// deduplicated by canonical form first, so the verdict does not depend on
/// the order a caller happens to list them in.
pub struct InternalOracle {
    limits: ProverLimits,
    models: ModelLimits,
    memo: Mutex<HashMap<String, Verdict>>,
}

impl InternalOracle {
    pub fn new(limits: ProverLimits) -> Self {
        Self::with_models(limits, ModelLimits::default())
    }

    pub fn with_models(limits: ProverLimits, models: ModelLimits) -> Self {
        InternalOracle {
            limits,
            models,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn limits(&self) -> ProverLimits {
        self.limits
    }
}

/// Premises in canonical order with duplicates removed, plus a memo key.
pub(crate) fn canonical_query(premises: &[Clause], conjecture: &Clause) -> (Vec<Clause>, String) {
    let mut keyed: Vec<(String, Clause)> = premises
        .iter()
        .map(|p| (p.canonical_key(), p.normalized()))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut key = keyed.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join("&");
    key.push_str("=>");
    key.push_str(&conjecture.canonical_key());
    (keyed.into_iter().map(|(_, c)| c).collect(), key)
}

impl EntailmentOracle for InternalOracle {
    fn check(&self, premises: &[Clause], conjecture: &Clause) -> Result<Verdict, ProverError> {
        let (sorted, key) = canonical_query(premises, conjecture);
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = decide_internal(&sorted, &conjecture.normalized(), self.limits, self.models);
        self.memo
            .lock()
            .expect("memo poisoned")
            .insert(key, v.clone());
        Ok(v)
    }

    fn describe(&self) -> String {
        format!(
            "internal-resolution(max_clauses={},max_weight={})+models(max_size={})",
            self.limits.max_clauses, self.limits.max_weight, self.models.max_size
        )
    }
}

/// Equality-free queries go to the internal prover, the rest to `external`.
pub struct RoutingOracle<E: EntailmentOracle> {
    pub internal: InternalOracle,
    pub external: E,
}

impl<E: EntailmentOracle> EntailmentOracle for RoutingOracle<E> {
    fn check(&self, premises: &[Clause], conjecture: &Clause) -> Result<Verdict, ProverError> {
        let eq = conjecture.has_equality() || premises.iter().any(Clause::has_equality);
        if eq {
            self.external.check(premises, conjecture)
        } else {
            self.internal.check(premises, conjecture)
        }
    }

    fn describe(&self) -> String {
        format!("routed({}|{})", self.internal.describe(), self.external.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_clause;

    fn c(s: &str) -> Clause {
        parse_clause(s).unwrap()
    }

    fn keys(cs: &[Clause]) -> BTreeSet<String> {
        cs.iter().map(Clause::canonical_key).collect()
    }

    fn limits() -> ProverLimits {
        ProverLimits {
            timeout: Duration::from_secs(10),
            max_clauses: 5000,
            max_weight: 40,
        }
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(resolve(&c("(p(a))"), &c("(~p(a))")), vec![Clause::empty()]);
        assert_eq!(resolve(&c("(p(X1)|q(X1))"), &c("(~p(a))")), vec![c("(q(a))")]);
        assert!(resolve(&c("(p(a))"), &c("(q(a))")).is_empty());
    }

    #[test]
    fn resolve_matches_brute_force_pair_enumeration() {
        // (p(X1)|p(a)) against (~p(a)): literal 0 binds X1=a leaving p(a);
        // literal 1 leaves p(X1)
        let got = keys(&resolve(&c("(p(X1)|p(a))"), &c("(~p(a))")));
        let expected = keys(&[c("(p(a))"), c("(p(X1))")]);
        assert_eq!(got, expected);
    }

    #[test]
    fn resolve_renames_apart() {
        let got = resolve(&c("(p(X1)|q(X1))"), &c("(~p(f(X1))|r(X1))"));
        assert_eq!(keys(&got), keys(&[c("(q(f(X1))|r(X1))")]));
    }

    #[test]
    fn factor_examples() {
        assert_eq!(factor(&c("(p(X1)|p(a))")), vec![c("(p(a))")]);
        assert!(factor(&c("(p(a)|q(a))")).is_empty());
        let got = keys(&factor(&c("(p(X1)|p(X2)|q(X1))")));
        assert!(got.contains(&c("(p(X1)|q(X1))").canonical_key()));
        // pairs (0,1) only: the two p literals
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn subsumed_examples() {
        assert!(subsumed(&c("(p(a)|q(a))"), &[c("(p(X1))")]));
        assert!(!subsumed(&c("(p(a))"), &[c("(p(a)|q(a))")]));
        assert!(subsumed(&c("(p(a)|p(b))"), &[c("(p(X1)|p(X2))")]));
    }

    #[test]
    fn prove_examples() {
        assert!(prove_internal(&[c("(p(a))")], &c("(p(a))"), limits()).is_entailed());
        let two = [c("(p(X1)|q(X1))"), c("(~p(a))")];
        assert!(prove_internal(&two, &c("(q(a))"), limits()).is_entailed());
        assert_eq!(
            prove_internal(&[c("(p(a))")], &c("(q(a))"), limits()),
            Verdict::NotEntailed
        );
    }

    #[test]
    fn set_theory_entailment() {
        let premises = [
            c("(disjoint(X1,complement(X2))|~member(f23(X1,complement(X2)),X2))"),
            c("(subset(image(X1,domain_of(X2)),X3)|~disjoint(X2,universal_set))"),
            c("(associative(X1,X2)|~disjoint(X1,X3)|~member(f35(X1,X2),X3))"),
            c("(disjoint(X1,X2)|member(f23(X1,X2),X3)|~subset(X1,X3))"),
        ];
        let goal = c("(disjoint(X1,complement(X2))|~subset(X1,X2))");
        assert!(prove_internal(&premises, &goal, limits()).is_entailed());
    }

    #[test]
    fn non_ground_conjecture_uses_fresh_constants() {
        let neg = negate_conjecture(&c("(p(X1,esk_goal_1)|~q(X2))"), []);
        assert_eq!(neg.len(), 2);
        assert_eq!(neg[0].to_string(), "(~p(esk_goal_2,esk_goal_1))");
        assert_eq!(neg[1].to_string(), "(q(esk_goal_3))");
    }

    #[test]
    fn equality_is_axiomatized() {
        let premises = [c("(a=b)"), c("(p(a))")];
        assert!(prove_internal(&premises, &c("(p(b))"), limits()).is_entailed());
        let premises = [c("(f(a)=b)"), c("(q(f(a)))")];
        assert!(prove_internal(&premises, &c("(q(b))"), limits()).is_entailed());
        assert_eq!(
            prove_internal(&[c("(a=b)")], &c("(p(b))"), limits()),
            Verdict::NotEntailed
        );
    }

    #[test]
    fn weight_cap_never_yields_not_entailed() {
        let tight = ProverLimits {
            max_weight: 3,
            ..limits()
        };
        let premises = [c("(less(X1,f(X1)))"), c("(less(X1,X3)|~less(X1,X2)|~less(X2,X3))")];
        let v = prove_internal(&premises, &c("(less(a,a))"), tight);
        assert_eq!(v, Verdict::ResourceOut(Limit::MaxWeight));
    }

    #[test]
    fn clause_cap_yields_resource_out() {
        let tight = ProverLimits {
            max_clauses: 20,
            ..limits()
        };
        let premises = [c("(less(X1,f(X1)))"), c("(less(X1,X3)|~less(X1,X2)|~less(X2,X3))")];
        let v = prove_internal(&premises, &c("(less(a,a))"), tight);
        assert!(matches!(v, Verdict::ResourceOut(_)));
    }

    #[test]
    fn saturation_examples() {
        let ax = |n: &str, s: &str| AnnotatedClause::new(n, Role::Axiom, c(s));
        let out = saturate_internal(&[ax("a1", "(p(a))"), ax("a2", "(~p(X1)|q(X1))")], limits());
        assert!(out.complete);
        let q = out
            .records
            .iter()
            .find(|r| r.clause == c("(q(a))"))
            .expect("q(a) derived");
        let mut parents = q.parents.clone();
        parents.sort();
        assert_eq!(parents, ["a1", "a2"]);

        let single = saturate_internal(&[ax("a1", "(p(a))")], limits());
        assert_eq!(single.records.len(), 1);

        let taut = saturate_internal(
            &[ax("t", "(p(a)|~p(a))"), ax("b", "(~p(X1)|r(X1))"), ax("c", "(p(b))")],
            limits(),
        );
        assert!(taut
            .records
            .iter()
            .filter(|r| r.role == Role::Derived)
            .all(|r| !r.clause.is_tautology() && !r.parents.contains(&"t".to_string())));
    }

    #[test]
    fn entailed_traces_replay() {
        let premises = [
            c("(disjoint(X1,complement(X2))|~member(f23(X1,complement(X2)),X2))"),
            c("(disjoint(X1,X2)|member(f23(X1,X2),X3)|~subset(X1,X3))"),
        ];
        let goal = c("(disjoint(X1,complement(X2))|~subset(X1,X2))");
        let Verdict::Entailed(Some(trace)) = prove_internal(&premises, &goal, limits()) else {
            panic!("expected a refutation");
        };
        assert!(trace.last().unwrap().clause.is_empty());
        assert_replayable(&trace);
    }

    pub(crate) fn assert_replayable(trace: &[DerivationRecord]) {
        let by_name: HashMap<&str, &Clause> =
            trace.iter().map(|r| (r.name.as_str(), &r.clause)).collect();
        for r in trace.iter().filter(|r| r.role == Role::Derived) {
            let key = r.clause.canonical_key();
            let products = match r.rule.as_str() {
                "resolution" => resolve(by_name[r.parents[0].as_str()], by_name[r.parents[1].as_str()]),
                "factoring" => factor(by_name[r.parents[0].as_str()]),
                other => panic!("unexpected rule {other}"),
            };
            assert!(
                products.iter().any(|p| p.canonical_key() == key),
                "{} is not a {} product of {:?}",
                r.clause,
                r.rule,
                r.parents
            );
        }
    }

    #[test]
    fn saturation_is_deterministic() {
        let ax: Vec<AnnotatedClause> = [
            "(p(X1)|q(f(X1)))",
            "(~q(X1)|r(X1,a))",
            "(~r(X1,X2)|p(X2))",
            "(~p(a)|s)",
        ]
        .iter()
        .enumerate()
        .map(|(i, s)| AnnotatedClause::new(format!("a{i}"), Role::Axiom, c(s)))
        .collect();
        let lim = ProverLimits {
            max_clauses: 300,
            ..limits()
        };
        assert_eq!(saturate_internal(&ax, lim), saturate_internal(&ax, lim));
    }

    #[test]
    fn oracle_is_order_insensitive_and_memoized() {
        let o = InternalOracle::new(limits());
        let a = [c("(p(X1)|q(X1))"), c("(~p(a))")];
        let b = [c("(~p(a))"), c("(q(Y)|p(Y))")];
        let g = c("(q(a))");
        assert_eq!(o.check(&a, &g).unwrap(), o.check(&b, &g).unwrap());
        assert_eq!(o.memo.lock().unwrap().len(), 1);
    }
}
