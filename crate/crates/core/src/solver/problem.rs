use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{Domain, SolverError, Value, VariableId};
use crate::syntax::SourceSpan;

/// Pure, total test over the values of a constraint's scope, passed in scope order.
pub type Predicate = Arc<dyn Fn(&[Value]) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Derived from the feature tree (group and parent/child relations).
    Structural,
    /// The root feature must be selected.
    Root,
    /// A constraint written by the modeller.
    CrossTree,
    /// Added directly through the solver API.
    User,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Structural => "structural",
            ConstraintKind::Root => "root",
            ConstraintKind::CrossTree => "cross-tree",
            ConstraintKind::User => "user",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a constraint came from: a relation name or the printed source expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub kind: ConstraintKind,
    pub label: String,
    pub span: Option<SourceSpan>,
}

impl Provenance {
    pub fn new(kind: ConstraintKind, label: impl Into<String>) -> Self {
        Provenance {
            kind,
            label: label.into(),
            span: None,
        }
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.label)
    }
}

#[derive(Clone)]
pub struct CspConstraint {
    pub scope: Vec<VariableId>,
    pub predicate: Predicate,
    pub provenance: Provenance,
}

impl CspConstraint {
    pub fn new(
        scope: Vec<VariableId>,
        provenance: Provenance,
        predicate: impl Fn(&[Value]) -> bool + Send + Sync + 'static,
    ) -> Self {
        CspConstraint {
            scope,
            predicate: Arc::new(predicate),
            provenance,
        }
    }

    pub fn holds(&self, args: &[Value]) -> bool {
        (self.predicate)(args)
    }
}

impl fmt::Debug for CspConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CspConstraint")
            .field("scope", &self.scope)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

/// Variables with finite domains plus predicate constraints over them.
///
/// Variables and constraints keep insertion order; the solver relies on it
/// for its enumeration order.
#[derive(Clone, Default, Debug)]
pub struct CspProblem {
    variables: Vec<VariableId>,
    domains: Vec<Domain>,
    index: HashMap<VariableId, usize>,
    constraints: Vec<CspConstraint>,
    // Variable indices of each constraint's scope.
    scopes: Vec<Vec<usize>>,
}

impl CspProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable. Integer domains are sorted ascending.
    pub fn add_variable<V: Into<Value>>(
        &mut self,
        id: impl Into<VariableId>,
        values: impl IntoIterator<Item = V>,
    ) -> Result<usize, SolverError> {
        let domain = Domain::new(values)?;
        self.add_domain(id, domain)
    }

    pub fn add_domain(&mut self, id: impl Into<VariableId>, domain: Domain) -> Result<usize, SolverError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(SolverError::DuplicateVariable(id));
        }
        let idx = self.variables.len();
        self.index.insert(id.clone(), idx);
        self.variables.push(id);
        self.domains.push(domain);
        Ok(idx)
    }

    /// Adds a constraint over `scope`; the predicate sees values in scope order.
    pub fn add_constraint<I, S>(
        &mut self,
        scope: I,
        predicate: impl Fn(&[Value]) -> bool + Send + Sync + 'static,
    ) -> Result<usize, SolverError>
    where
        I: IntoIterator<Item = S>,
        S: Into<VariableId>,
    {
        let label = format!("#{}", self.constraints.len());
        let scope = scope.into_iter().map(Into::into).collect();
        self.push_constraint(CspConstraint::new(
            scope,
            Provenance::new(ConstraintKind::User, label),
            predicate,
        ))
    }

    pub fn push_constraint(&mut self, constraint: CspConstraint) -> Result<usize, SolverError> {
        let vars = constraint
            .scope
            .iter()
            .map(|id| self.index_of(id.as_str()).ok_or_else(|| SolverError::UnknownVariable(id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        self.scopes.push(vars);
        self.constraints.push(constraint);
        Ok(self.constraints.len() - 1)
    }

    /// A copy of this problem with one variable's domain replaced.
    pub fn with_domain(&self, var: &str, domain: Domain) -> Result<CspProblem, SolverError> {
        let idx = self
            .index_of(var)
            .ok_or_else(|| SolverError::UnknownVariable(var.into()))?;
        let mut out = self.clone();
        out.domains[idx] = domain;
        Ok(out)
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.index.get(var).copied()
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, var: usize) -> &Domain {
        &self.domains[var]
    }

    pub fn constraints(&self) -> &[CspConstraint] {
        &self.constraints
    }

    pub(crate) fn scope_indices(&self, constraint: usize) -> &[usize] {
        &self.scopes[constraint]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }
}

/// Stable textual dump: one `var` line per variable, then one `constraint`
/// line per constraint, both in declaration order.
impl fmt::Display for CspProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (var, domain) in self.variables.iter().zip(&self.domains) {
            writeln!(f, "var {var} : {domain}")?;
        }
        for c in &self.constraints {
            let scope: Vec<&str> = c.scope.iter().map(VariableId::as_str).collect();
            writeln!(
                f,
                "constraint {} [{}] {}",
                c.provenance.kind,
                scope.join(", "),
                c.provenance.label
            )?;
        }
        Ok(())
    }
}
