//! Interestingness scores for derived clauses.

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{signature_stats, Clause, SignatureStats};
use crate::graph::{DerivationGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid rater config: {0}")]
pub struct RaterConfigError(String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaterConfig {
    pub weight_cap: usize,
    pub threshold: f64,
    /// Complexity, surprisingness and usefulness weights.
    pub weights: [f64; 3],
    pub top_n: usize,
}

impl Default for RaterConfig {
    fn default() -> Self {
        RaterConfig {
            weight_cap: 60,
            threshold: 0.5,
            weights: [1.0 / 3.0; 3],
            top_n: 200,
        }
    }
}

impl RaterConfig {
    pub fn validate(&self) -> Result<(), RaterConfigError> {
        if self.weight_cap == 0 {
            return Err(RaterConfigError("weight_cap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(RaterConfigError("threshold must lie in [0,1]".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(RaterConfigError("weights must be nonnegative".into()));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(RaterConfigError("weights must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterestScore {
    pub complexity: f64,
    pub surprisingness: f64,
    pub usefulness: f64,
    pub combined: f64,
}

pub fn score_complexity(c: &Clause, cfg: &RaterConfig) -> f64 {
    (1.0 - c.weight() as f64 / cfg.weight_cap as f64).max(0.0)
}

/// One minus the mean familiarity of the clause's symbol pairs, where a
/// pair's familiarity is how often it co-occurs relative to its rarer member.
pub fn score_surprisingness(c: &Clause, stats: &SignatureStats) -> f64 {
    let syms: Vec<&str> = c.symbols().into_iter().collect();
    if syms.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, s) in syms.iter().enumerate() {
        for t in &syms[i + 1..] {
            let rare = stats.occurrence(s).min(stats.occurrence(t)).max(1);
            total += stats.cooccurrence(s, t) as f64 / rare as f64;
            pairs += 1;
        }
    }
    (1.0 - total / pairs as f64).clamp(0.0, 1.0)
}

/// Derived nodes whose weighted complexity and surprisingness reach the
/// threshold. `partial[n]` holds those two scores for node `n`.
pub fn provisionally_interesting(g: &DerivationGraph, partial: &[(f64, f64)], cfg: &RaterConfig) -> FixedBitSet {
    let [wc, ws, _] = cfg.weights;
    let mut interesting = FixedBitSet::with_capacity(g.len());
    for (v, &(c, s)) in partial.iter().enumerate() {
        if !g.is_root(v) && wc * c + ws * s >= cfg.threshold * (wc + ws) {
            interesting.insert(v);
        }
    }
    interesting
}

/// Share of each node's descendants that are provisionally interesting.
pub fn score_usefulness(g: &DerivationGraph, partial: &[(f64, f64)], cfg: &RaterConfig) -> Vec<f64> {
    let n = g.len();
    let interesting = provisionally_interesting(g, partial, cfg);
    let mut desc = vec![FixedBitSet::with_capacity(n); n];
    let mut out = vec![0.0; n];
    for &v in g.topological_order().iter().rev() {
        let mut d = FixedBitSet::with_capacity(n);
        for &c in g.children(v) {
            d.insert(c);
            d.union_with(&desc[c]);
        }
        let total = d.count_ones(..);
        if total > 0 {
            out[v] = d.intersection_count(&interesting) as f64 / total as f64;
        }
        desc[v] = d;
    }
    out
}

/// Scores for every node. Surprisingness is measured against the axioms
/// of the graph.
pub fn rate_graph(g: &DerivationGraph, cfg: &RaterConfig) -> Vec<InterestScore> {
    let stats = signature_stats(g.roots().map(|r| &g.clause(r).clause));
    let partial: Vec<(f64, f64)> = (0..g.len())
        .map(|v| {
            let c = &g.clause(v).clause;
            (score_complexity(c, cfg), score_surprisingness(c, &stats))
        })
        .collect();
    let useful = score_usefulness(g, &partial, cfg);
    let [wc, ws, wu] = cfg.weights;
    partial
        .iter()
        .zip(useful)
        .map(|(&(c, s), u)| InterestScore {
            complexity: c,
            surprisingness: s,
            usefulness: u,
            combined: (wc * c + ws * s + wu * u).clamp(0.0, 1.0),
        })
        .collect()
}

/// Derived nodes by combined score, best first, ties by name; at most
/// `top_n` of them.
pub fn rank_theorems(g: &DerivationGraph, scores: &[InterestScore], cfg: &RaterConfig) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = g.derived().collect();
    ids.sort_by(|&a, &b| {
        scores[b]
            .combined
            .total_cmp(&scores[a].combined)
            .then_with(|| g.clause(a).name.cmp(&g.clause(b).name))
    });
    ids.truncate(cfg.top_n);
    ids
}

/// Tab-separated table: node name and the four scores.
pub fn score_table(g: &DerivationGraph, scores: &[InterestScore]) -> String {
    let mut out = String::from("node\tcomplexity\tsurprisingness\tusefulness\tcombined\n");
    for (v, s) in scores.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            g.clause(v).name,
            s.complexity,
            s.surprisingness,
            s.usefulness,
            s.combined
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_clause;
    use crate::graph::{build_graph, fixtures::log};

    fn c(s: &str) -> Clause {
        parse_clause(s).unwrap()
    }

    #[test]
    fn complexity_boundaries() {
        let cfg = RaterConfig::default();
        assert_eq!(score_complexity(&Clause::empty(), &cfg), 1.0);
        // weight 60: p with 59 constant arguments
        let args = vec!["a"; 59].join(",");
        let wide = c(&format!("(p({args}))"));
        assert_eq!(wide.weight(), 60);
        assert_eq!(score_complexity(&wide, &cfg), 0.0);
        let thirty = c(&format!("(p({}))", vec!["a"; 29].join(",")));
        assert_eq!(score_complexity(&thirty, &cfg), 0.5);
    }

    #[test]
    fn surprisingness_extremes() {
        let stats = signature_stats(&[c("(p(a))"), c("(q(b))")]);
        assert_eq!(score_surprisingness(&c("(p(a))"), &stats), 0.0);
        assert_eq!(score_surprisingness(&c("(p(b))"), &stats), 1.0);
        assert_eq!(score_surprisingness(&c("(p(X1))"), &stats), 0.0);
    }

    #[test]
    fn surprisingness_hand_computed() {
        let axioms = [
            c("(p(a)|q(b))"),
            c("(p(b))"),
            c("(q(a))"),
            c("(r(a))"),
            c("(p(X1)|r(X1))"),
        ];
        let stats = signature_stats(&axioms);
        // occurrences: p 3, q 2, r 2, a 3, b 2
        // clause (p(a)|r(a)) has symbols {a, p, r}
        //   {a,p}: 1 / min(3,3) = 1/3   ({p(a)|q(b)})
        //   {a,r}: 1 / min(3,2) = 1/2   ({r(a)})
        //   {p,r}: 1 / min(3,2) = 1/2   ({p(X1)|r(X1)})
        let expected = 1.0 - (1.0 / 3.0 + 0.5 + 0.5) / 3.0;
        let got = score_surprisingness(&c("(p(a)|r(a))"), &stats);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn usefulness_examples() {
        let g = build_graph(&log(&[("A", &[]), ("B", &[]), ("L", &["A", "B"]), ("T", &["L"])])).unwrap();
        let cfg = RaterConfig::default();
        // T interesting, L not
        let partial = vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 1.0)];
        let u = score_usefulness(&g, &partial, &cfg);
        assert_eq!(u[3], 0.0);
        assert_eq!(u[2], 1.0);
        assert_eq!(u[0], 0.5);
    }

    #[test]
    fn ranking_ties_by_name() {
        let g = build_graph(&log(&[("A", &[]), ("z", &["A"]), ("m", &["A"]), ("b", &["A"])])).unwrap();
        let scores = vec![InterestScore::default(); 4];
        let ranked = rank_theorems(&g, &scores, &RaterConfig::default());
        let names: Vec<&str> = ranked.iter().map(|&i| g.clause(i).name.as_str()).collect();
        assert_eq!(names, ["b", "m", "z"]);
    }

    #[test]
    fn single_derived_node_ranks() {
        let g = build_graph(&log(&[("A", &[]), ("T", &["A"])])).unwrap();
        let scores = rate_graph(&g, &RaterConfig::default());
        assert_eq!(rank_theorems(&g, &scores, &RaterConfig::default()), vec![1]);
    }

    #[test]
    fn config_validation() {
        assert!(RaterConfig::default().validate().is_ok());
        let bad = RaterConfig {
            threshold: 1.5,
            ..RaterConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RaterConfig {
            weights: [0.5, 0.5, 0.5],
            ..RaterConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
