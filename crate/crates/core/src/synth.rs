//! Seeded generator of large, always-satisfiable models for scale tests
//! and benchmarks.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A balanced tree of `features` features named `F0`, `F1`, … in
/// breadth-first order, every inner node an `all` group with up to
/// `branching` children. Non-root features are randomly optional `(0..1)` or
/// mandatory `(1..1)`; `requires` random `Fa implies Fb` constraints follow.
///
/// Selecting every feature satisfies all constraints, so the model is never
/// void. Output is a pure function of the arguments.
pub fn balanced_model(features: usize, branching: usize, requires: usize, seed: u64) -> String {
    assert!(features >= 1 && branching >= 1, "need a root and a positive branching factor");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mandatory: Vec<bool> = (0..features).map(|i| i == 0 || rng.gen_bool(0.5)).collect();

    let mut out = String::from("FM = ");
    // Explicit stack of (node, depth, closing?) to avoid recursion on deep trees.
    let mut stack = vec![(0usize, 0usize, false)];
    while let Some((node, depth, closing)) = stack.pop() {
        let indent = "    ".repeat(depth);
        let last_sibling = node == 0 || (node - 1) % branching == branching - 1 || node + 1 == features;
        let sep = if last_sibling { "" } else { "," };
        if closing {
            let _ = writeln!(out, "{indent}]{sep}");
            continue;
        }
        let card = if mandatory[node] { "(1..1)" } else { "(0..1)" };
        let first_child = node * branching + 1;
        let pad = if depth == 0 { "" } else { indent.as_str() };
        if first_child < features {
            let _ = writeln!(out, "{pad}F{node} {card} : all [");
            stack.push((node, depth, true));
            let last_child = (first_child + branching).min(features);
            for child in (first_child..last_child).rev() {
                stack.push((child, depth + 1, false));
            }
        } else {
            let _ = writeln!(out, "{pad}F{node} {card}{sep}");
        }
    }
    // The root line ends the declaration.
    out.truncate(out.trim_end().len());
    out.push_str(";\n");

    if features > 1 {
        for _ in 0..requires {
            let a = rng.gen_range(1..features);
            let mut b = rng.gen_range(1..features);
            while b == a && features > 2 {
                b = rng.gen_range(1..features);
            }
            let _ = writeln!(out, "F{a} implies F{b};");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Analyzer;

    #[test]
    fn small_models_parse_and_are_valid() {
        for (n, b) in [(1, 2), (2, 2), (7, 2), (10, 3), (40, 4), (13, 1)] {
            let src = balanced_model(n, b, 5, 7);
            let a = Analyzer::from_source(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
            assert_eq!(a.model().features().len(), n);
            assert!(a.valid_model());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(balanced_model(50, 3, 10, 1), balanced_model(50, 3, 10, 1));
        assert_ne!(balanced_model(50, 3, 10, 1), balanced_model(50, 3, 10, 2));
    }

    #[test]
    fn requires_count() {
        let src = balanced_model(20, 2, 9, 3);
        assert_eq!(src.matches(" implies ").count(), 9);
    }

    #[test]
    fn thousand_features() {
        let a = Analyzer::from_source(&balanced_model(1000, 4, 50, 42)).unwrap();
        assert_eq!(a.model().features().len(), 1000);
        assert!(a.valid_model());
        assert_eq!(a.enumerate_products(Some(1)).len(), 1);
    }
}
