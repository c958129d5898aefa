//! Clausal first-order formulas in TPTP CNF syntax.
//!
//! Everything downstream (prover, graph, rater, task generation) speaks in
//! terms of [`Clause`] and [`AnnotatedClause`]. Clauses keep the literal order
//! they were written with; equality of clauses "up to renaming and literal
//! order" goes through [`Clause::canonical_key`].

mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use parse::{
    load_tptp_file, parse_annotated_clause, parse_clause, parse_tptp, GeneralTerm, LoadError,
    ParseError, Statement, TptpRecord,
};

/// Reserved predicate symbol for `s = t` / `s != t` literals.
pub const EQUALITY: &str = "=";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// Function application; constants have no arguments.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(functor: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(functor.into(), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    fn weight(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::weight).sum::<usize>(),
        }
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Term::Var(v) => f(v),
            Term::App(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    fn visit_functors<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        if let Term::App(name, args) = self {
            f(name);
            args.iter().for_each(|a| a.visit_functors(f));
        }
    }

    fn rename(&self, map: &HashMap<&str, String>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v.as_str()).cloned().unwrap_or_else(|| v.clone())),
            Term::App(name, args) => {
                Term::App(name.clone(), args.iter().map(|a| a.rename(map)).collect())
            }
        }
    }

    fn write_skeleton(&self, out: &mut String) {
        match self {
            Term::Var(_) => out.push('_'),
            Term::App(name, args) => {
                out.push_str(name);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        a.write_skeleton(out);
                    }
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    write!(f, "({})", args.iter().join(","))?;
                }
                Ok(())
            }
        }
    }
}

/// A signed atom. The atom is stored as predicate plus arguments, so it can
/// never be a bare variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Literal {
    pub fn new(positive: bool, predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Literal {
            positive,
            predicate: predicate.into(),
            args,
        }
    }

    pub fn equality(positive: bool, lhs: Term, rhs: Term) -> Self {
        Literal::new(positive, EQUALITY, vec![lhs, rhs])
    }

    pub fn is_equality(&self) -> bool {
        self.predicate == EQUALITY && self.args.len() == 2
    }

    pub fn negated(&self) -> Literal {
        Literal {
            positive: !self.positive,
            ..self.clone()
        }
    }

    fn weight(&self) -> usize {
        1 + self.args.iter().map(Term::weight).sum::<usize>()
    }

    fn rename(&self, map: &HashMap<&str, String>) -> Literal {
        Literal {
            positive: self.positive,
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| a.rename(map)).collect(),
        }
    }

    fn skeleton(&self) -> String {
        let mut s = String::new();
        s.push(if self.positive { '+' } else { '-' });
        s.push_str(&self.predicate);
        s.push('(');
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            a.write_skeleton(&mut s);
        }
        s.push(')');
        s
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_equality() {
            let op = if self.positive { "=" } else { "!=" };
            return write!(f, "{}{}{}", self.args[0], op, self.args[1]);
        }
        if !self.positive {
            f.write_str("~")?;
        }
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.iter().join(","))?;
        }
        Ok(())
    }
}

/// A disjunction of literals. The empty clause is the contradiction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

/// Upper bound on literal orderings tried when canonicalising a clause whose
/// literals share the same shape.
const CANONICAL_PERMUTATION_CAP: usize = 40_320;

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn empty() -> Self {
        Clause::default()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    /// Number of symbol occurrences: predicates, functors and variables.
    /// Polarity markers are not counted.
    pub fn weight(&self) -> usize {
        self.literals.iter().map(Literal::weight).sum()
    }

    /// Distinct variable names in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for lit in &self.literals {
            for a in &lit.args {
                a.visit_vars(&mut |v| {
                    if !seen.contains(&v) {
                        seen.push(v);
                    }
                });
            }
        }
        seen
    }

    pub fn is_ground(&self) -> bool {
        self.variables().is_empty()
    }

    /// Predicate and function symbols, excluding the equality predicate.
    pub fn symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for lit in &self.literals {
            if !lit.is_equality() {
                out.insert(lit.predicate.as_str());
            }
            for a in &lit.args {
                a.visit_functors(&mut |s| {
                    out.insert(s);
                });
            }
        }
        out
    }

    pub fn has_equality(&self) -> bool {
        self.literals.iter().any(Literal::is_equality)
    }

    /// Renames variables to `X1..Xn` by first occurrence.
    pub fn normalized(&self) -> Clause {
        let map: HashMap<&str, String> = self
            .variables()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, format!("X{}", i + 1)))
            .collect();
        Clause {
            literals: self.literals.iter().map(|l| l.rename(&map)).collect(),
        }
    }

    /// A string that is identical for two clauses exactly when they are
    /// equal up to variable renaming and literal order.
    ///
    /// Literals are ordered by their variable-free shape; literals sharing a
    /// shape are permuted exhaustively and the smallest rendering wins. Past
    /// [`CANONICAL_PERMUTATION_CAP`] orderings only the input order within each
    /// group is used, which can only miss duplicates, never merge distinct
    /// clauses.
    pub fn canonical_key(&self) -> String {
        let mut keyed: Vec<(String, &Literal)> =
            self.literals.iter().map(|l| (l.skeleton(), l)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let groups: Vec<Vec<&Literal>> = keyed
            .iter()
            .chunk_by(|(k, _)| k.clone())
            .into_iter()
            .map(|(_, g)| g.map(|(_, l)| *l).collect())
            .collect();

        let mut combos = 1usize;
        for g in &groups {
            combos = combos.saturating_mul((1..=g.len()).product::<usize>());
        }
        let render = |lits: Vec<Literal>| Clause::new(lits).normalized().to_string();
        if combos > CANONICAL_PERMUTATION_CAP {
            return render(groups.into_iter().flatten().cloned().collect());
        }
        let per_group: Vec<Vec<Vec<&Literal>>> = groups
            .iter()
            .map(|g| g.iter().copied().permutations(g.len()).collect())
            .collect();
        per_group
            .iter()
            .map(|alts| alts.iter())
            .multi_cartesian_product()
            .map(|choice| render(choice.into_iter().flatten().map(|l| (*l).clone()).collect()))
            .min()
            .unwrap_or_else(|| render(Vec::new()))
    }

    pub fn is_variant_of(&self, other: &Clause) -> bool {
        self.len() == other.len() && self.canonical_key() == other.canonical_key()
    }

    /// True if some literal occurs with both polarities.
    pub fn is_tautology(&self) -> bool {
        self.literals.iter().enumerate().any(|(i, a)| {
            self.literals[i + 1..].iter().any(|b| {
                a.positive != b.positive && a.predicate == b.predicate && a.args == b.args
            })
        })
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("($false)");
        }
        write!(f, "({})", self.literals.iter().join("|"))
    }
}

/// Renders a clause in the parenthesised prompt style, `($false)` when empty.
pub fn render_clause(c: &Clause) -> String {
    c.to_string()
}

pub fn normalize_variables(c: &Clause) -> Clause {
    c.normalized()
}

pub fn clause_weight(c: &Clause) -> usize {
    c.weight()
}

impl Serialize for Clause {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Clause {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_clause(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Axiom,
    Derived,
    Conjecture,
    /// Only produced when handing refutation problems to a prover.
    NegatedConjecture,
}

impl Role {
    pub fn parse(word: &str) -> Option<Role> {
        match word {
            "axiom" | "hypothesis" | "definition" | "assumption" => Some(Role::Axiom),
            "plain" | "lemma" | "theorem" | "corollary" | "derived" => Some(Role::Derived),
            "conjecture" => Some(Role::Conjecture),
            "negated_conjecture" => Some(Role::NegatedConjecture),
            _ => None,
        }
    }

    pub fn as_tptp(self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Derived => "plain",
            Role::Conjecture => "conjecture",
            Role::NegatedConjecture => "negated_conjecture",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedClause {
    pub name: String,
    pub role: Role,
    pub clause: Clause,
    #[serde(default)]
    pub source_domain: String,
}

impl AnnotatedClause {
    pub fn new(name: impl Into<String>, role: Role, clause: Clause) -> Self {
        AnnotatedClause {
            name: name.into(),
            role,
            clause,
            source_domain: String::new(),
        }
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.source_domain = domain.into();
        self
    }

    /// Full TPTP record including the terminating period.
    pub fn to_tptp(&self) -> String {
        format!("{self}.")
    }
}

/// `cnf(name,role,(...))`, the form used in prompt context sections.
impl fmt::Display for AnnotatedClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cnf({},{},{})", self.name, self.role.as_tptp(), self.clause)
    }
}

/// Per-clause symbol occurrence and pairwise co-occurrence counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignatureStats {
    pub occurrence: BTreeMap<String, usize>,
    /// Keys are ordered pairs `(a, b)` with `a < b`.
    pub cooccurrence: BTreeMap<(String, String), usize>,
}

impl SignatureStats {
    pub fn occurrence(&self, s: &str) -> usize {
        self.occurrence.get(s).copied().unwrap_or(0)
    }

    pub fn cooccurrence(&self, s: &str, t: &str) -> usize {
        let key = if s <= t {
            (s.to_string(), t.to_string())
        } else {
            (t.to_string(), s.to_string())
        };
        self.cooccurrence.get(&key).copied().unwrap_or(0)
    }
}

/// A symbol counts once per clause it appears in; every unordered pair of
/// distinct symbols within a clause counts once for that clause.
pub fn signature_stats<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> SignatureStats {
    let mut stats = SignatureStats::default();
    for c in clauses {
        let syms: Vec<&str> = c.symbols().into_iter().collect();
        for s in &syms {
            *stats.occurrence.entry(s.to_string()).or_default() += 1;
        }
        for (i, a) in syms.iter().enumerate() {
            for b in &syms[i + 1..] {
                *stats
                    .cooccurrence
                    .entry((a.to_string(), b.to_string()))
                    .or_default() += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Clause {
        parse_clause(s).unwrap()
    }

    #[test]
    fn renders_single_literal_and_empty() {
        assert_eq!(c("(inductive(omega))").to_string(), "(inductive(omega))");
        assert_eq!(Clause::empty().to_string(), "($false)");
        assert_eq!(
            c("(disjoint(X1,complement(X2))|~subset(X1,X2))").to_string(),
            "(disjoint(X1,complement(X2))|~subset(X1,X2))"
        );
    }

    #[test]
    fn normalizes_by_first_occurrence() {
        assert_eq!(c("(p(Y)|q(Y,Z))").normalized().to_string(), "(p(X1)|q(X1,X2))");
        let ground = c("(p(a)|~q(f(b)))");
        assert_eq!(ground.normalized(), ground);
        let once = c("(p(X2)|p(X1))").normalized();
        assert_eq!(once.to_string(), "(p(X1)|p(X2))");
        assert_eq!(once.normalized(), once);
    }

    #[test]
    fn weights_count_symbols_and_variables() {
        assert_eq!(c("(inductive(omega))").weight(), 2);
        assert_eq!(c("(p(X1)|~p(X1))").weight(), 4);
        assert_eq!(Clause::empty().weight(), 0);
        assert_eq!(c("(X1=X2|~subclass(X1,X2))").weight(), 6);
    }

    /// Independent count straight off the rendered text: every maximal run
    /// of identifier characters is one symbol occurrence.
    fn token_count(rendered: &str) -> usize {
        rendered
            .split(|ch: char| !(ch.is_alphanumeric() || ch == '_' || ch == '$'))
            .filter(|t| !t.is_empty())
            .count()
    }

    #[test]
    fn sample_conclusion_weight_matches_token_count() {
        let text = "(disjoint(X1,complement(X2))|~subset(X1,X2))";
        assert_eq!(token_count(text), 7);
        assert_eq!(c(text).weight(), 7);
    }

    #[test]
    fn canonical_key_ignores_order_and_names() {
        let a = c("(q(Y,Z)|p(Y))");
        let b = c("(p(X1)|q(X1,X2))");
        assert_eq!(a.canonical_key(), b.canonical_key());
        assert!(a.is_variant_of(&b));
        let d = c("(p(X1)|q(X2,X1))");
        assert_ne!(a.canonical_key(), d.canonical_key());
        // same-shape literals where only the cross-literal variable links differ
        let e = c("(r(X1,X2)|r(X2,X3))");
        let f = c("(r(Y2,Y3)|r(Y1,Y2))");
        assert_eq!(e.canonical_key(), f.canonical_key());
        let g = c("(r(X1,X2)|r(X3,X2))");
        assert_ne!(e.canonical_key(), g.canonical_key());
    }

    #[test]
    fn tautology_detection() {
        assert!(c("(p(X1)|q|~p(X1))").is_tautology());
        assert!(!c("(p(X1)|~p(X2))").is_tautology());
    }

    #[test]
    fn signature_stats_unit_clauses() {
        let s = signature_stats(&[c("(p(a))"), c("(q(a))")]);
        assert_eq!(s.occurrence("p"), 1);
        assert_eq!(s.occurrence("q"), 1);
        assert_eq!(s.occurrence("a"), 2);
        assert_eq!(s.cooccurrence("p", "a"), 1);
        assert_eq!(s.cooccurrence("a", "q"), 1);
        assert_eq!(s.cooccurrence("p", "q"), 0);
        assert_eq!(s.cooccurrence.len(), 2);
    }

    #[test]
    fn signature_stats_single_clause() {
        let s = signature_stats(&[c("(p(a)|q(a))")]);
        assert_eq!(s.cooccurrence.len(), 3);
        assert_eq!(s.cooccurrence("p", "q"), 1);
        assert_eq!(s.cooccurrence("p", "a"), 1);
        assert_eq!(s.cooccurrence("q", "a"), 1);
        assert_eq!(s.occurrence("a"), 1);
    }

    #[test]
    fn signature_stats_ignore_equality() {
        let s = signature_stats(&[c("(X1=X2|~subclass(X1,X2))")]);
        assert_eq!(s.occurrence(EQUALITY), 0);
        assert_eq!(s.occurrence("subclass"), 1);
    }

    #[test]
    fn sample_context_cooccurrence_by_enumeration() {
        let axioms = [
            "(disjoint(X1,X2)|member(f23(X1,X2),X1))",
            "(~member(X1,complement(X2))|~member(X1,X2))",
            "(disjoint(X1,X2)|member(f23(X1,X2),X2))",
            "(member(X3,X2)|~subset(X1,X2)|~member(X3,X1))",
        ];
        let clauses: Vec<Clause> = axioms.iter().map(|a| c(a)).collect();
        // brute force over the rendered text: a pair co-occurs in a clause
        // when both names appear as whole tokens
        let has = |text: &str, sym: &str| {
            text.split(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
                .any(|t| t == sym)
        };
        let brute = axioms
            .iter()
            .filter(|t| has(t, "disjoint") && has(t, "member"))
            .count();
        assert_eq!(brute, 2);
        let s = signature_stats(&clauses);
        assert_eq!(s.cooccurrence("disjoint", "member"), brute);
        assert_eq!(s.cooccurrence("member", "disjoint"), brute);
    }
}
