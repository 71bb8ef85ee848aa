//! Lowering of a resolved feature model to a [`CspProblem`].
//!
//! Every feature becomes an integer variable holding its clone count (0 when
//! unselected); every attribute becomes a singleton variable named
//! `Feature.attribute`. The tree contributes structural constraints, the root
//! must be selected, and each written constraint becomes a predicate.
//!
//! Group relations constrain children only while the parent is selected:
//!
//! | relation | constraint                                   |
//! |----------|----------------------------------------------|
//! | any      | child selected ⇒ parent selected             |
//! | `all`    | parent ⇒ child, for children with min ≥ 1    |
//! | `moreof` | parent ⇒ at least one child                  |
//! | `oneof`  | parent ⇒ exactly one child                   |

use crate::model::{typecheck, Feature, ResolvedModel, TypeError, TypedExpr, TypedKind};
use crate::solver::{ConstraintKind, CspConstraint, CspProblem, Domain, Provenance, Value, VariableId};
use crate::syntax::{ArithOp, Cardinality, CompareOp, GroupKind, LogicOp};

/// A feature is present in a configuration iff its clone count is positive.
pub fn exists(count: u64) -> bool {
    count > 0
}

fn selected(v: &Value) -> bool {
    v.as_int().is_some_and(|c| c > 0)
}

/// `{0} ∪ {max(1, min) ..= max}`: zero for "not selected", otherwise a clone count.
pub fn feature_domain(c: Cardinality) -> Domain {
    let low = i64::from(c.min.max(1));
    let values = std::iter::once(0).chain(low..=i64::from(c.max));
    Domain::new(values).expect("cardinality checked during resolution")
}

/// Structural constraints of `parent`'s group over `children`.
pub fn lower_group(parent: &Feature, kind: GroupKind, children: &[&Feature]) -> Vec<CspConstraint> {
    let p = VariableId::new(&parent.name);
    let structural = |label: String| Provenance::new(ConstraintKind::Structural, label);
    let mut out = Vec::new();

    for child in children {
        out.push(CspConstraint::new(
            vec![p.clone(), VariableId::new(&child.name)],
            structural(format!("parent({} -> {})", child.name, parent.name)),
            |v| !selected(&v[1]) || selected(&v[0]),
        ));
    }

    let names = || children.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ");
    let group_scope = || std::iter::once(p.clone()).chain(children.iter().map(|c| VariableId::new(&c.name))).collect();
    match kind {
        GroupKind::All => {
            for child in children.iter().filter(|c| c.cardinality.min >= 1) {
                out.push(CspConstraint::new(
                    vec![p.clone(), VariableId::new(&child.name)],
                    structural(format!("mandatory({} -> {})", parent.name, child.name)),
                    |v| !selected(&v[0]) || selected(&v[1]),
                ));
            }
        }
        GroupKind::MoreOf => out.push(CspConstraint::new(
            group_scope(),
            structural(format!("moreof({}: {})", parent.name, names())),
            |v| !selected(&v[0]) || v[1..].iter().any(selected),
        )),
        GroupKind::OneOf => out.push(CspConstraint::new(
            group_scope(),
            structural(format!("oneof({}: {})", parent.name, names())),
            |v| !selected(&v[0]) || v[1..].iter().filter(|x| selected(x)).count() == 1,
        )),
    }
    out
}

/// Turns a typed constraint into a predicate over the variables it mentions.
///
/// Evaluation is strict: if any subterm is undefined (division by zero,
/// integer overflow) the constraint is violated for that assignment.
pub fn lower_cross_tree(expr: &TypedExpr) -> CspConstraint {
    let mut scope = Vec::new();
    let program = Eval::build(expr, &mut scope);
    CspConstraint::new(
        scope,
        Provenance::new(ConstraintKind::CrossTree, expr.to_string()).with_span(expr.span),
        move |args| matches!(program.eval(args), Some(Value::Bool(true))),
    )
}

/// Lowers the whole model. Variable order is feature pre-order with each
/// feature's attributes right after it; constraints are structural (pre-order),
/// then the root constraint, then cross-tree constraints in source order.
pub fn compile(model: &ResolvedModel) -> Result<CspProblem, TypeError> {
    let typed = typecheck(model)?;
    let mut problem = CspProblem::new();
    let declared = "names are unique after resolution";

    for f in model.features() {
        problem
            .add_domain(VariableId::new(&f.name), feature_domain(f.cardinality))
            .expect(declared);
        for a in &f.attributes {
            problem
                .add_domain(VariableId::attribute(&f.name, &a.name), Domain::singleton(&a.value))
                .expect(declared);
        }
    }

    for f in model.features() {
        if let Some(kind) = f.group {
            let children: Vec<&Feature> = f.children.iter().map(|&c| model.feature(c)).collect();
            for c in lower_group(f, kind, &children) {
                problem.push_constraint(c).expect(declared);
            }
        }
    }

    let root = model.root();
    problem
        .push_constraint(CspConstraint::new(
            vec![VariableId::new(&root.name)],
            Provenance::new(ConstraintKind::Root, format!("root({})", root.name)),
            |v| selected(&v[0]),
        ))
        .expect(declared);

    for t in &typed {
        problem.push_constraint(lower_cross_tree(t)).expect(declared);
    }
    Ok(problem)
}

/// Compiled expression: variables are replaced by scope positions.
enum Eval {
    Count(usize),
    Exists(usize),
    Var(usize),
    Const(Value),
    Not(Box<Eval>),
    Logic(LogicOp, Box<Eval>, Box<Eval>),
    Compare(CompareOp, Box<Eval>, Box<Eval>),
    Arith(ArithOp, Box<Eval>, Box<Eval>),
}

impl Eval {
    fn build(expr: &TypedExpr, scope: &mut Vec<VariableId>) -> Eval {
        fn slot(scope: &mut Vec<VariableId>, id: VariableId) -> usize {
            scope.iter().position(|s| *s == id).unwrap_or_else(|| {
                scope.push(id);
                scope.len() - 1
            })
        }
        let mut sub = |e: &TypedExpr| Box::new(Eval::build(e, scope));
        match &expr.kind {
            TypedKind::Count(name) => Eval::Count(slot(scope, VariableId::new(name))),
            TypedKind::Exists(name) => Eval::Exists(slot(scope, VariableId::new(name))),
            TypedKind::Attribute { feature, attribute } => {
                Eval::Var(slot(scope, VariableId::attribute(feature, attribute)))
            }
            TypedKind::Literal(lit) => Eval::Const(lit.into()),
            TypedKind::Not(e) => Eval::Not(sub(e)),
            TypedKind::Logic(op, l, r) => {
                let l = sub(l);
                Eval::Logic(*op, l, sub(r))
            }
            TypedKind::Compare(op, l, r) => {
                let l = sub(l);
                Eval::Compare(*op, l, sub(r))
            }
            TypedKind::Arith(op, l, r) => {
                let l = sub(l);
                Eval::Arith(*op, l, sub(r))
            }
        }
    }

    fn eval(&self, args: &[Value]) -> Option<Value> {
        Some(match self {
            Eval::Count(i) | Eval::Var(i) => args[*i].clone(),
            Eval::Exists(i) => Value::Bool(selected(&args[*i])),
            Eval::Const(v) => v.clone(),
            Eval::Not(e) => Value::Bool(!e.eval(args)?.as_bool()?),
            Eval::Logic(op, l, r) => {
                let (l, r) = (l.eval(args)?.as_bool()?, r.eval(args)?.as_bool()?);
                Value::Bool(match op {
                    LogicOp::And => l && r,
                    LogicOp::Or => l || r,
                    LogicOp::Implies => !l || r,
                })
            }
            Eval::Compare(op, l, r) => {
                let ord = compare(&l.eval(args)?, &r.eval(args)?)?;
                Value::Bool(match op {
                    CompareOp::Eq => ord.is_eq(),
                    CompareOp::Ne => ord.is_ne(),
                    CompareOp::Lt => ord.is_lt(),
                    CompareOp::Le => ord.is_le(),
                    CompareOp::Gt => ord.is_gt(),
                    CompareOp::Ge => ord.is_ge(),
                })
            }
            Eval::Arith(op, l, r) => arith(*op, &l.eval(args)?, &r.eval(args)?)?,
        })
    }
}

fn compare(l: &Value, r: &Value) -> Option<std::cmp::Ordering> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        _ if l.as_f64().is_some() && r.as_f64().is_some() => l.as_f64()?.partial_cmp(&r.as_f64()?),
        (Value::Str(a), Value::Str(b)) | (Value::Symbol(a), Value::Symbol(b)) => Some(a.cmp(b)),
        (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
        _ => None,
    }
}

fn arith(op: ArithOp, l: &Value, r: &Value) -> Option<Value> {
    if let (Value::Int(a), Value::Int(b), false) = (l, r, op == ArithOp::Div) {
        return match op {
            ArithOp::Add => a.checked_add(*b),
            ArithOp::Sub => a.checked_sub(*b),
            ArithOp::Mul => a.checked_mul(*b),
            ArithOp::Div => unreachable!(),
        }
        .map(Value::Int);
    }
    let (a, b) = (l.as_f64()?, r.as_f64()?);
    let out = match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div if b == 0.0 => return None,
        ArithOp::Div => a / b,
    };
    out.is_finite().then_some(Value::Float(out))
}
