//! Knuth-Bendix ordering with unit weights. Symbols are compared by
//! (arity, name), so constants sit below unary functions, and so on.

use std::cmp::Ordering;

use super::engine::{ETerm, Interner};

fn weight(t: &ETerm) -> usize {
    match t {
        ETerm::Var(_) => 1,
        ETerm::App(_, args) => 1 + args.iter().map(weight).sum::<usize>(),
    }
}

fn count_vars(t: &ETerm, sign: i64, counts: &mut Vec<i64>) {
    match t {
        ETerm::Var(v) => {
            let v = *v as usize;
            if counts.len() <= v {
                counts.resize(v + 1, 0);
            }
            counts[v] += sign;
        }
        ETerm::App(_, args) => args.iter().for_each(|a| count_vars(a, sign, counts)),
    }
}

fn contains_var(t: &ETerm, v: u32) -> bool {
    match t {
        ETerm::Var(w) => *w == v,
        ETerm::App(_, args) => args.iter().any(|a| contains_var(a, v)),
    }
}

fn precedence(syms: &Interner, f: u32, fa: usize, g: u32, ga: usize) -> Ordering {
    fa.cmp(&ga).then_with(|| syms.name(f).cmp(syms.name(g)))
}

/// `s > t` in the ordering.
pub(crate) fn kbo_gt(syms: &Interner, s: &ETerm, t: &ETerm) -> bool {
    if s == t {
        return false;
    }
    match (s, t) {
        (ETerm::Var(_), _) => false,
        (_, ETerm::Var(v)) => contains_var(s, *v),
        (ETerm::App(f, sa), ETerm::App(g, ta)) => {
            let mut counts = Vec::new();
            count_vars(s, 1, &mut counts);
            count_vars(t, -1, &mut counts);
            if counts.iter().any(|&c| c < 0) {
                return false;
            }
            match weight(s).cmp(&weight(t)) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match precedence(syms, *f, sa.len(), *g, ta.len()) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => sa
                        .iter()
                        .zip(ta)
                        .find(|(x, y)| x != y)
                        .is_some_and(|(x, y)| kbo_gt(syms, x, y)),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Interner, ETerm, ETerm, ETerm) {
        let mut syms = Interner::default();
        let a = syms.intern("a");
        let f = syms.intern("f");
        let ta = ETerm::App(a, vec![]);
        let fx = ETerm::App(f, vec![ETerm::Var(0)]);
        let fa = ETerm::App(f, vec![ta.clone()]);
        (syms, ta, fx, fa)
    }

    #[test]
    fn heavier_ground_term_is_greater() {
        let (syms, a, _, fa) = setup();
        assert!(kbo_gt(&syms, &fa, &a));
        assert!(!kbo_gt(&syms, &a, &fa));
    }

    #[test]
    fn variable_condition_blocks_comparison() {
        let (syms, a, fx, _) = setup();
        // f(X) vs a: heavier but a has no variables, so f(X) > a holds
        assert!(kbo_gt(&syms, &fx, &a));
        // f(a) vs X: incomparable, X does not occur in f(a)
        let x = ETerm::Var(0);
        assert!(!kbo_gt(&syms, &ETerm::App(1, vec![a.clone()]), &x));
        assert!(kbo_gt(&syms, &fx, &x));
    }

    #[test]
    fn irreflexive_and_asymmetric() {
        let (syms, a, fx, fa) = setup();
        for s in [&a, &fx, &fa] {
            assert!(!kbo_gt(&syms, s, s));
            for t in [&a, &fx, &fa] {
                assert!(!(kbo_gt(&syms, s, t) && kbo_gt(&syms, t, s)));
            }
        }
    }
}
