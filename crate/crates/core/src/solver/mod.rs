//! Finite-domain constraint solver: variables with finite domains, predicate
//! constraints, and complete enumeration of solutions.
//!
//! ```
//! use fml_core::solver::{CspProblem, solve_all};
//!
//! let mut problem = CspProblem::new();
//! problem.add_variable("A", [0, 1]).unwrap();
//! problem.add_variable("B", [0, 1]).unwrap();
//! problem
//!     .add_constraint(["A", "B"], |v| v[0].as_int() > Some(0) && v[1].as_int() > Some(0))
//!     .unwrap();
//! let solutions = solve_all(&problem);
//! assert_eq!(solutions.len(), 1);
//! assert_eq!(solutions[0].to_string(), "{A: 1, B: 1}");
//! ```

mod problem;
mod search;
mod value;

use thiserror::Error;

pub use problem::{ConstraintKind, CspConstraint, CspProblem, Predicate, Provenance};
pub use search::{count_solutions, solve_all, solve_first, Assignment, Search, Solver, SolverStats};
pub use value::{Domain, Value, VariableId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("variable `{0}` is already declared")]
    DuplicateVariable(VariableId),
    #[error("domain is empty")]
    EmptyDomain,
    #[error("value {0} appears twice in a domain")]
    DuplicateValue(Value),
    #[error("unknown variable `{0}`")]
    UnknownVariable(VariableId),
}

#[cfg(test)]
mod tests {
    use itertools::Itertools;
    use proptest::prelude::*;

    use super::*;

    fn gt0(v: &Value) -> bool {
        v.as_int().is_some_and(|x| x > 0)
    }

    fn mandatory_problem() -> CspProblem {
        let mut p = CspProblem::new();
        p.add_variable("A", [0, 1]).unwrap();
        p.add_variable("B", [0, 1]).unwrap();
        p.add_constraint(["A", "B"], |v| gt0(&v[0]) && gt0(&v[1])).unwrap();
        p
    }

    fn attribute_problem() -> CspProblem {
        let mut p = CspProblem::new();
        p.add_variable("A.p", 0..10).unwrap();
        p.add_variable("B.m", ["ok"]).unwrap();
        p.add_constraint(["A.p", "B.m"], |v| {
            v[0].as_int().is_some_and(|p| p > 5) && v[1] == Value::from("ok")
        })
        .unwrap();
        p
    }

    fn contradictory_problem() -> CspProblem {
        let mut p = CspProblem::new();
        p.add_variable("A", [0]).unwrap();
        p.add_constraint(["A"], |v| gt0(&v[0])).unwrap();
        p
    }

    const ALL: [Search; 3] = [Search::Propagate, Search::Backtrack, Search::GenerateAndTest];

    #[test]
    fn variables_keep_insertion_order() {
        let p = mandatory_problem();
        let names: Vec<_> = p.variables().iter().map(VariableId::as_str).collect();
        assert_eq!(names, ["A", "B"]);
    }

    #[test]
    fn duplicate_variable() {
        let mut p = CspProblem::new();
        p.add_variable("A", [0, 1]).unwrap();
        assert_eq!(
            p.add_variable("A", [0, 1]),
            Err(SolverError::DuplicateVariable("A".into()))
        );
    }

    #[test]
    fn empty_domain() {
        let mut p = CspProblem::new();
        assert_eq!(p.add_variable("A", Vec::<i64>::new()), Err(SolverError::EmptyDomain));
        assert_eq!(p.num_variables(), 0);
    }

    #[test]
    fn duplicate_domain_value() {
        assert!(matches!(Domain::new([1, 1]), Err(SolverError::DuplicateValue(_))));
    }

    #[test]
    fn integer_domains_sort_others_keep_order() {
        let ints = Domain::new([3, 0, 2]).unwrap();
        assert_eq!(ints.values(), [Value::Int(0), Value::Int(2), Value::Int(3)]);
        let strs = Domain::new(["b", "a"]).unwrap();
        assert_eq!(strs.values(), [Value::from("b"), Value::from("a")]);
    }

    #[test]
    fn constraint_is_recorded() {
        let p = mandatory_problem();
        assert_eq!(p.constraints().len(), 1);
        assert_eq!(p.constraints()[0].scope, vec![VariableId::from("A"), "B".into()]);
    }

    #[test]
    fn unknown_scope_variable() {
        let mut p = CspProblem::new();
        p.add_variable("A", [0, 1]).unwrap();
        assert_eq!(
            p.add_constraint(["A", "C"], |_| true),
            Err(SolverError::UnknownVariable("C".into()))
        );
        assert!(p.constraints().is_empty());
    }

    #[test]
    fn false_nullary_constraint_is_unsatisfiable() {
        let mut p = mandatory_problem();
        p.add_constraint(Vec::<&str>::new(), |_| false).unwrap();
        for s in ALL {
            assert!(Solver::new(&p).with_search(s).solve_all().is_empty(), "{s:?}");
        }
    }

    #[test]
    fn mandatory_problem_has_one_solution() {
        for s in ALL {
            let solutions = Solver::new(&mandatory_problem()).with_search(s).solve_all();
            assert_eq!(solutions.len(), 1);
            assert_eq!(solutions[0].get("A"), Some(&Value::Int(1)));
            assert_eq!(solutions[0].get("B"), Some(&Value::Int(1)));
        }
    }

    #[test]
    fn attribute_problem_solutions() {
        let expected: Vec<Vec<Value>> = (6..=9).map(|p| vec![Value::Int(p), Value::from("ok")]).collect();
        for s in ALL {
            let got: Vec<Vec<Value>> = Solver::new(&attribute_problem())
                .with_search(s)
                .solve_all()
                .iter()
                .map(|a| a.values().to_vec())
                .collect();
            assert_eq!(got, expected, "{s:?}");
        }
    }

    #[test]
    fn vacuous_problem_has_one_empty_solution() {
        let p = CspProblem::new();
        for s in ALL {
            let all = Solver::new(&p).with_search(s).solve_all();
            assert_eq!(all.len(), 1);
            assert!(all[0].is_empty());
        }
        assert_eq!(count_solutions(&p), 1);
    }

    #[test]
    fn first_solution() {
        assert_eq!(solve_first(&mandatory_problem()).unwrap().to_string(), "{A: 1, B: 1}");
        assert_eq!(solve_first(&contradictory_problem()), None);
        let first = solve_first(&attribute_problem()).unwrap();
        assert_eq!(first.to_string(), "{A.p: 6, B.m: \"ok\"}");
    }

    #[test]
    fn first_solution_stops_early() {
        let mut p = CspProblem::new();
        for i in 0..20 {
            p.add_variable(format!("x{i}"), [0, 1]).unwrap();
        }
        let mut solver = Solver::new(&p).with_search(Search::Backtrack);
        solver.solve_first();
        assert_eq!(solver.stats().solutions, 1);
        assert_eq!(solver.stats().nodes, 21);
    }

    #[test]
    fn counts() {
        assert_eq!(count_solutions(&attribute_problem()), 4);
        assert_eq!(count_solutions(&contradictory_problem()), 0);
    }

    #[test]
    fn stats_are_consistent() {
        for s in ALL {
            let p = attribute_problem();
            let mut solver = Solver::new(&p).with_search(s);
            solver.solve_all();
            let st = solver.stats();
            assert_eq!(st.solutions, 4);
            assert!(st.solutions <= st.nodes);
            assert!(st.checks > 0);
        }
    }

    #[test]
    fn repeated_scope_variable() {
        let mut p = CspProblem::new();
        p.add_variable("x", [0, 1, 2]).unwrap();
        p.add_constraint(["x", "x"], |v| v[0] == v[1] && v[0] != Value::Int(1)).unwrap();
        for s in ALL {
            let got: Vec<_> = Solver::new(&p).with_search(s).solve_all().iter().map(|a| a.values()[0].clone()).collect();
            assert_eq!(got, [Value::Int(0), Value::Int(2)], "{s:?}");
        }
    }

    #[test]
    fn conflicts_name_the_failing_constraint() {
        let p = contradictory_problem();
        let mut solver = Solver::new(&p);
        assert!(solver.solve_first().is_none());
        assert_eq!(solver.conflicts(), [0]);
    }

    #[test]
    fn restricted_copy() {
        let p = mandatory_problem();
        let q = p.with_domain("A", Domain::singleton(0)).unwrap();
        assert_eq!(count_solutions(&q), 0);
        assert_eq!(count_solutions(&p), 1);
        assert!(p.with_domain("Z", Domain::singleton(0)).is_err());
    }

    #[test]
    fn dump_format() {
        let p = attribute_problem();
        assert_eq!(
            p.to_string(),
            "var A.p : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}\nvar B.m : {\"ok\"}\nconstraint user [A.p, B.m] #0\n"
        );
    }

    /// Random problem: per-variable domain sizes, and constraints given as a
    /// scope plus a seed deciding which tuples are allowed.
    fn random_problem() -> impl Strategy<Value = (Vec<i64>, Vec<(Vec<usize>, u64)>)> {
        proptest::collection::vec(1..=4i64, 1..=6).prop_flat_map(|sizes| {
            let n = sizes.len();
            let constraint = (proptest::collection::vec(0..n, 0..=3), any::<u64>());
            (Just(sizes), proptest::collection::vec(constraint, 0..=8))
        })
    }

    fn allowed(seed: u64, tuple: &[i64]) -> bool {
        // Cheap deterministic hash of (seed, tuple); keeps about 3/4 of tuples.
        let h = tuple.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, &v| {
            (h ^ v as u64).wrapping_mul(0x0100_0000_01b3).rotate_left(29)
        });
        h % 4 != 0
    }

    proptest! {
        #[test]
        fn matches_cartesian_filtering((sizes, constraints) in random_problem()) {
            let mut p = CspProblem::new();
            for (i, &size) in sizes.iter().enumerate() {
                p.add_variable(format!("x{i}"), 0..size).unwrap();
            }
            for (scope, seed) in &constraints {
                let seed = *seed;
                p.add_constraint(scope.iter().map(|v| format!("x{v}")), move |vals| {
                    let t: Vec<i64> = vals.iter().map(|v| v.as_int().unwrap()).collect();
                    allowed(seed, &t)
                })
                .unwrap();
            }
            let oracle: Vec<Vec<i64>> = sizes
                .iter()
                .map(|&s| 0..s)
                .multi_cartesian_product()
                .filter(|t| {
                    constraints.iter().all(|(scope, seed)| {
                        allowed(*seed, &scope.iter().map(|&v| t[v]).collect::<Vec<_>>())
                    })
                })
                .collect();
            for s in ALL {
                let got: Vec<Vec<i64>> = Solver::new(&p)
                    .with_search(s)
                    .solve_all()
                    .iter()
                    .map(|a| a.values().iter().map(|v| v.as_int().unwrap()).collect())
                    .collect();
                // Same set, and in lexicographic (declaration, domain) order.
                prop_assert_eq!(&got, &oracle, "{:?}", s);
            }
        }
    }
}
