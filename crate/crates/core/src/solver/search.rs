//! Depth-first enumeration of CSP solutions.
//!
//! Variables are assigned in declaration order and values tried in domain
//! order, so every strategy yields the same solutions in the same sequence.
//! Strategies differ only in how early a dead end is noticed.

use std::collections::VecDeque;
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{CspProblem, Value, VariableId};

/// Constraints whose scope cross-product exceeds this many tuples are not
/// used for propagation; they are still checked once fully assigned.
const PROPAGATION_LIMIT: usize = 1 << 12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Search {
    /// Backtracking with generalized arc consistency maintained after every
    /// assignment. Removes only values that belong to no solution of some
    /// constraint, so enumeration order is unchanged.
    #[default]
    Propagate,
    /// Chronological backtracking; each constraint is checked as soon as the
    /// last variable of its scope is assigned.
    Backtrack,
    /// Walk the full cartesian product and test every constraint on every
    /// complete assignment.
    GenerateAndTest,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// Search nodes: the root plus every value assignment tried.
    pub nodes: u64,
    /// Predicate evaluations.
    pub checks: u64,
    pub solutions: u64,
}

/// One full assignment, in variable declaration order.
#[derive(Clone, PartialEq, Eq)]
pub struct Assignment {
    variables: Arc<[VariableId]>,
    values: Vec<Value>,
}

impl Assignment {
    pub fn get(&self, var: &str) -> Option<&Value> {
        let idx = self.variables.iter().position(|v| v.as_str() == var)?;
        Some(&self.values[idx])
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VariableId, &Value)> {
        self.variables.iter().zip(&self.values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter().map(|(k, v)| (k.as_str(), v))).finish()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

pub struct Solver<'p> {
    problem: &'p CspProblem,
    search: Search,
    stats: SolverStats,
    conflicts: Vec<usize>,
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p CspProblem) -> Self {
        Solver {
            problem,
            search: Search::default(),
            stats: SolverStats::default(),
            conflicts: Vec::new(),
        }
    }

    pub fn with_search(mut self, search: Search) -> Self {
        self.search = search;
        self
    }

    /// Counters accumulated over every run of this solver.
    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Indices of the constraints that rejected assignments at the deepest
    /// level the most recent run reached. After an unsatisfiable run these
    /// are the constraints the search could not get past.
    pub fn conflicts(&self) -> &[usize] {
        &self.conflicts
    }

    /// Calls `f` on each solution in order until it returns `Break`.
    pub fn for_each_solution(&mut self, mut f: impl FnMut(&Assignment) -> ControlFlow<()>) {
        let variables: Arc<[VariableId]> = self.problem.variables().into();
        let problem = self.problem;
        self.run(&mut |chosen| {
            let values = chosen
                .iter()
                .enumerate()
                .map(|(var, &vi)| problem.domain(var).values()[vi].clone())
                .collect();
            f(&Assignment {
                variables: variables.clone(),
                values,
            })
        });
    }

    pub fn solve_all(&mut self) -> Vec<Assignment> {
        let mut out = Vec::new();
        self.for_each_solution(|a| {
            out.push(a.clone());
            ControlFlow::Continue(())
        });
        out
    }

    pub fn solve_first(&mut self) -> Option<Assignment> {
        let mut out = None;
        self.for_each_solution(|a| {
            out = Some(a.clone());
            ControlFlow::Break(())
        });
        out
    }

    pub fn count_solutions(&mut self) -> u64 {
        let mut count = 0;
        self.run(&mut |_| {
            count += 1;
            ControlFlow::Continue(())
        });
        count
    }

    fn run(&mut self, on_solution: &mut dyn FnMut(&[usize]) -> ControlFlow<()>) {
        let mut engine = Engine::new(self.problem);
        match self.search {
            Search::Propagate => engine.search(true, on_solution),
            Search::Backtrack => engine.search(false, on_solution),
            Search::GenerateAndTest => engine.generate_and_test(on_solution),
        }
        self.stats.nodes += engine.stats.nodes;
        self.stats.checks += engine.stats.checks;
        self.stats.solutions += engine.stats.solutions;
        self.conflicts = engine.conflicts;
    }
}

/// All solutions of `problem`, in enumeration order.
pub fn solve_all(problem: &CspProblem) -> Vec<Assignment> {
    Solver::new(problem).solve_all()
}

pub fn solve_first(problem: &CspProblem) -> Option<Assignment> {
    Solver::new(problem).solve_first()
}

pub fn count_solutions(problem: &CspProblem) -> u64 {
    Solver::new(problem).count_solutions()
}

/// Per-run scratch state.
struct Engine<'p> {
    problem: &'p CspProblem,
    n: usize,
    // Distinct variables of each constraint, and for each scope position the
    // index into that list (a scope may name a variable twice).
    vars_of: Vec<Vec<usize>>,
    slot_of: Vec<Vec<usize>>,
    // Constraints whose highest-indexed variable is the key.
    completed_by: Vec<Vec<usize>>,
    // Constraints mentioning the key.
    watching: Vec<Vec<usize>>,
    nullary: Vec<usize>,
    alive: Vec<Vec<bool>>,
    size: Vec<usize>,
    // (variable, value index) pairs removed, for undo.
    trail: Vec<(usize, usize)>,
    chosen: Vec<usize>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    args: Vec<Value>,
    stats: SolverStats,
    deepest: usize,
    conflicts: Vec<usize>,
}

impl<'p> Engine<'p> {
    fn new(problem: &'p CspProblem) -> Self {
        let n = problem.num_variables();
        let m = problem.constraints().len();
        let mut vars_of = Vec::with_capacity(m);
        let mut slot_of = Vec::with_capacity(m);
        let mut completed_by = vec![Vec::new(); n];
        let mut watching = vec![Vec::new(); n];
        let mut nullary = Vec::new();
        for c in 0..m {
            let scope = problem.scope_indices(c);
            let mut vars: Vec<usize> = Vec::new();
            let slots = scope
                .iter()
                .map(|v| match vars.iter().position(|u| u == v) {
                    Some(i) => i,
                    None => {
                        vars.push(*v);
                        vars.len() - 1
                    }
                })
                .collect();
            match vars.iter().max() {
                Some(&last) => completed_by[last].push(c),
                None => nullary.push(c),
            }
            for &v in &vars {
                watching[v].push(c);
            }
            vars_of.push(vars);
            slot_of.push(slots);
        }
        let alive = problem.domains().iter().map(|d| vec![true; d.len()]).collect();
        let size = problem.domains().iter().map(|d| d.len()).collect();
        Engine {
            problem,
            n,
            vars_of,
            slot_of,
            completed_by,
            watching,
            nullary,
            alive,
            size,
            trail: Vec::new(),
            chosen: vec![0; n],
            queue: VecDeque::new(),
            queued: vec![false; m],
            args: Vec::new(),
            stats: SolverStats::default(),
            deepest: 0,
            conflicts: Vec::new(),
        }
    }

    fn blame(&mut self, depth: usize, constraint: usize) {
        if depth > self.deepest {
            self.deepest = depth;
            self.conflicts.clear();
        }
        if depth == self.deepest && !self.conflicts.contains(&constraint) {
            self.conflicts.push(constraint);
        }
    }

    /// Evaluates constraint `c` with each distinct variable set to `values[k]`.
    fn holds(&mut self, c: usize, values: &[usize]) -> bool {
        self.stats.checks += 1;
        self.args.clear();
        for &slot in &self.slot_of[c] {
            let var = self.vars_of[c][slot];
            self.args.push(self.problem.domain(var).values()[values[slot]].clone());
        }
        self.problem.constraints()[c].holds(&self.args)
    }

    fn holds_at_chosen(&mut self, c: usize) -> bool {
        let values: Vec<usize> = self.vars_of[c].iter().map(|&v| self.chosen[v]).collect();
        self.holds(c, &values)
    }

    fn nullary_ok(&mut self) -> bool {
        for c in self.nullary.clone() {
            if !self.holds(c, &[]) {
                self.blame(0, c);
                return false;
            }
        }
        true
    }

    // ---- depth-first search ------------------------------------------------

    fn search(&mut self, propagate: bool, on_solution: &mut dyn FnMut(&[usize]) -> ControlFlow<()>) {
        self.stats.nodes += 1;
        if !self.nullary_ok() {
            return;
        }
        if propagate {
            for c in 0..self.problem.constraints().len() {
                if !self.vars_of[c].is_empty() {
                    self.queued[c] = true;
                    self.queue.push_back(c);
                }
            }
            if !self.propagate(0) {
                return;
            }
        }
        if self.n == 0 {
            self.stats.solutions += 1;
            let _ = on_solution(&[]);
            return;
        }

        let mut cursor = vec![0usize; self.n];
        let mut marks = vec![0usize; self.n];
        let mut level = 0;
        loop {
            let mut placed = false;
            while cursor[level] < self.alive[level].len() {
                let vi = cursor[level];
                cursor[level] += 1;
                if !self.alive[level][vi] {
                    continue;
                }
                self.stats.nodes += 1;
                self.chosen[level] = vi;
                marks[level] = self.trail.len();
                let ok = if propagate {
                    self.assign_and_propagate(level, vi)
                } else {
                    self.check_completed(level)
                };
                if ok {
                    placed = true;
                    break;
                }
                self.undo(marks[level]);
            }

            if !placed {
                if level == 0 {
                    return;
                }
                level -= 1;
                self.undo(marks[level]);
                continue;
            }
            if level + 1 == self.n {
                self.stats.solutions += 1;
                if on_solution(&self.chosen).is_break() {
                    return;
                }
                self.undo(marks[level]);
            } else {
                level += 1;
                cursor[level] = 0;
            }
        }
    }

    fn check_completed(&mut self, var: usize) -> bool {
        for i in 0..self.completed_by[var].len() {
            let c = self.completed_by[var][i];
            if !self.holds_at_chosen(c) {
                self.blame(var + 1, c);
                return false;
            }
        }
        true
    }

    fn assign_and_propagate(&mut self, var: usize, vi: usize) -> bool {
        for other in 0..self.alive[var].len() {
            if other != vi && self.alive[var][other] {
                self.remove(var, other);
            }
        }
        self.enqueue_watchers(var, usize::MAX);
        self.propagate(var + 1)
    }

    fn remove(&mut self, var: usize, vi: usize) {
        self.alive[var][vi] = false;
        self.size[var] -= 1;
        self.trail.push((var, vi));
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (var, vi) = self.trail.pop().unwrap();
            self.alive[var][vi] = true;
            self.size[var] += 1;
        }
    }

    fn enqueue_watchers(&mut self, var: usize, except: usize) {
        for &c in &self.watching[var] {
            if c != except && !self.queued[c] {
                self.queued[c] = true;
                self.queue.push_back(c);
            }
        }
    }

    fn propagate(&mut self, depth: usize) -> bool {
        while let Some(c) = self.queue.pop_front() {
            self.queued[c] = false;
            if !self.revise(c) {
                self.blame(depth, c);
                while let Some(rest) = self.queue.pop_front() {
                    self.queued[rest] = false;
                }
                return false;
            }
        }
        true
    }

    /// Removes every live value of `c`'s variables that has no satisfying
    /// tuple among the live values of the others. False on a domain wipe-out.
    fn revise(&mut self, c: usize) -> bool {
        let vars = self.vars_of[c].clone();
        let tuples = vars
            .iter()
            .try_fold(1usize, |acc, &v| acc.checked_mul(self.size[v]))
            .unwrap_or(usize::MAX);
        if tuples > PROPAGATION_LIMIT {
            return true;
        }
        let live: Vec<Vec<usize>> = vars
            .iter()
            .map(|&v| (0..self.alive[v].len()).filter(|&i| self.alive[v][i]).collect())
            .collect();
        let mut supported: Vec<Vec<bool>> = vars.iter().map(|&v| vec![false; self.alive[v].len()]).collect();
        let mut unsupported: usize = live.iter().map(Vec::len).sum();

        let mut odometer = vec![0usize; vars.len()];
        let mut tuple: Vec<usize> = live.iter().map(|l| l[0]).collect();
        'tuples: loop {
            if tuple.iter().enumerate().any(|(k, &vi)| !supported[k][vi]) && self.holds(c, &tuple) {
                for (k, &vi) in tuple.iter().enumerate() {
                    if !supported[k][vi] {
                        supported[k][vi] = true;
                        unsupported -= 1;
                    }
                }
                if unsupported == 0 {
                    return true;
                }
            }
            // Odometer step, last position fastest.
            let mut k = vars.len();
            loop {
                if k == 0 {
                    break 'tuples;
                }
                k -= 1;
                odometer[k] += 1;
                if odometer[k] < live[k].len() {
                    tuple[k] = live[k][odometer[k]];
                    break;
                }
                odometer[k] = 0;
                tuple[k] = live[k][0];
            }
        }

        for (k, &var) in vars.iter().enumerate() {
            let mut changed = false;
            for &vi in &live[k] {
                if !supported[k][vi] {
                    self.remove(var, vi);
                    changed = true;
                }
            }
            if self.size[var] == 0 {
                return false;
            }
            if changed {
                self.enqueue_watchers(var, c);
            }
        }
        true
    }

    // ---- exhaustive ----------------------------------------------------------

    fn generate_and_test(&mut self, on_solution: &mut dyn FnMut(&[usize]) -> ControlFlow<()>) {
        self.stats.nodes += 1;
        let all: Vec<usize> = (0..self.problem.constraints().len()).collect();
        let lens: Vec<usize> = self.alive.iter().map(Vec::len).collect();
        let mut tuple = vec![0usize; self.n];
        loop {
            self.stats.nodes += 1;
            let mut ok = true;
            for &c in &all {
                if !self.holds_at_chosen_tuple(c, &tuple) {
                    self.blame(self.n, c);
                    ok = false;
                    break;
                }
            }
            if ok {
                self.stats.solutions += 1;
                if on_solution(&tuple).is_break() {
                    return;
                }
            }
            // Lexicographic successor, last variable fastest.
            let mut k = self.n;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                tuple[k] += 1;
                if tuple[k] < lens[k] {
                    break;
                }
                tuple[k] = 0;
            }
        }
    }

    fn holds_at_chosen_tuple(&mut self, c: usize, tuple: &[usize]) -> bool {
        let values: Vec<usize> = self.vars_of[c].iter().map(|&v| tuple[v]).collect();
        self.holds(c, &values)
    }
}
