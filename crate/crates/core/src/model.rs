//! Semantic analysis: name tables, reference resolution, cardinality checks
//! and constraint typing.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error("duplicate feature `{name}` (first declared at {first})")]
    DuplicateFeature {
        name: String,
        first: SourceSpan,
        second: SourceSpan,
    },
    #[error("duplicate attribute `{name}` on feature `{feature}`")]
    DuplicateAttribute {
        feature: String,
        name: String,
        span: SourceSpan,
    },
    #[error("unknown reference `{name}`")]
    UnknownReference { name: String, span: SourceSpan },
    #[error("invalid cardinality {cardinality} on feature `{feature}`")]
    BadCardinality {
        feature: String,
        cardinality: Cardinality,
        span: SourceSpan,
    },
}

impl ResolveError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ResolveError::DuplicateFeature { second, .. } => *second,
            ResolveError::DuplicateAttribute { span, .. }
            | ResolveError::UnknownReference { span, .. }
            | ResolveError::BadCardinality { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type mismatch: expected {expected}, found {found}")]
pub struct TypeError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

/// Index of a feature in declaration (pre-)order; the root is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub cardinality: Cardinality,
    pub attributes: Vec<AttributeDecl>,
    pub parent: Option<FeatureId>,
    pub group: Option<GroupKind>,
    pub children: Vec<FeatureId>,
    pub span: SourceSpan,
}

/// A feature model whose names are all bound. Immutable once built.
#[derive(Debug, Clone)]
pub struct ResolvedModel {
    ast: FeatureModelAst,
    features: Vec<Feature>,
    by_name: HashMap<String, FeatureId>,
    attributes: HashMap<(String, String), (FeatureId, usize)>,
}

impl ResolvedModel {
    pub fn ast(&self) -> &FeatureModelAst {
        &self.ast
    }

    /// All features in declaration order.
    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, id: FeatureId) -> &Feature {
        &self.features[id.0]
    }

    pub fn root(&self) -> &Feature {
        &self.features[0]
    }

    pub fn lookup(&self, name: &str) -> Option<FeatureId> {
        self.by_name.get(name).copied()
    }

    pub fn attribute(&self, feature: &str, attribute: &str) -> Option<&AttributeDecl> {
        let &(owner, idx) = self.attributes.get(&(feature.to_string(), attribute.to_string()))?;
        Some(&self.features[owner.0].attributes[idx])
    }

    pub fn constraints(&self) -> &[ConstraintExpr] {
        &self.ast.constraints
    }

    pub fn parent(&self, id: FeatureId) -> Option<&Feature> {
        self.feature(id).parent.map(|p| self.feature(p))
    }
}

/// Builds the name tables and checks every reference and cardinality.
pub fn resolve(ast: FeatureModelAst) -> Result<ResolvedModel, ResolveError> {
    let mut features: Vec<Feature> = Vec::new();
    let mut by_name: HashMap<String, FeatureId> = HashMap::new();
    let mut attributes = HashMap::new();

    // Explicit stack of (node, parent) for a pre-order walk.
    let mut stack: Vec<(&FeatureNode, Option<FeatureId>)> = vec![(&ast.root, None)];
    while let Some((node, parent)) = stack.pop() {
        if !node.cardinality.is_valid() {
            return Err(ResolveError::BadCardinality {
                feature: node.name.clone(),
                cardinality: node.cardinality,
                span: node.cardinality_span.unwrap_or(node.span),
            });
        }
        let id = FeatureId(features.len());
        if let Some(prev) = by_name.insert(node.name.clone(), id) {
            return Err(ResolveError::DuplicateFeature {
                name: node.name.clone(),
                first: features[prev.0].span,
                second: node.span,
            });
        }
        for (i, attr) in node.attributes.iter().enumerate() {
            let key = (node.name.clone(), attr.name.clone());
            if attributes.insert(key, (id, i)).is_some() {
                return Err(ResolveError::DuplicateAttribute {
                    feature: node.name.clone(),
                    name: attr.name.clone(),
                    span: attr.span,
                });
            }
        }
        if let Some(p) = parent {
            features[p.0].children.push(id);
        }
        features.push(Feature {
            name: node.name.clone(),
            cardinality: node.cardinality,
            attributes: node.attributes.clone(),
            parent,
            group: node.group.as_ref().map(|g| g.kind),
            children: Vec::new(),
            span: node.span,
        });
        if let Some(group) = &node.group {
            stack.extend(group.children.iter().rev().map(|c| (c, Some(id))));
        }
    }

    for constraint in &ast.constraints {
        check_references(constraint, &by_name, &attributes)?;
    }

    Ok(ResolvedModel {
        ast,
        features,
        by_name,
        attributes,
    })
}

fn check_references(
    expr: &ConstraintExpr,
    features: &HashMap<String, FeatureId>,
    attributes: &HashMap<(String, String), (FeatureId, usize)>,
) -> Result<(), ResolveError> {
    match &expr.kind {
        ExprKind::FeatureRef(name) if !features.contains_key(name) => {
            Err(ResolveError::UnknownReference {
                name: name.clone(),
                span: expr.span,
            })
        }
        ExprKind::AttributeRef { feature, attribute }
            if !attributes.contains_key(&(feature.clone(), attribute.clone())) =>
        {
            let name = if features.contains_key(feature) {
                format!("{feature}.{attribute}")
            } else {
                feature.clone()
            };
            Err(ResolveError::UnknownReference { name, span: expr.span })
        }
        _ => expr
            .children()
            .into_iter()
            .try_for_each(|c| check_references(c, features, attributes)),
    }
}

// ---- typing ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Bool,
    Int,
    Float,
    Str,
    Symbol,
}

impl Type {
    pub fn of(lit: &Literal) -> Type {
        match lit {
            Literal::Int(_) => Type::Int,
            Literal::Float(_) => Type::Float,
            Literal::Str(_) => Type::Str,
            Literal::Bool(_) => Type::Bool,
            Literal::Symbol(_) => Type::Symbol,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Float)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Bool => "BOOL",
            Type::Int => "INT",
            Type::Float => "FLOAT",
            Type::Str => "STRING",
            Type::Symbol => "SYMBOL",
        })
    }
}

/// A constraint expression with a static type on every node.
///
/// Feature references are split by role: `Count` where the clone count is
/// used as a number, `Exists` where the feature is used as a condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedExpr {
    pub kind: TypedKind,
    pub ty: Type,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedKind {
    Count(String),
    Exists(String),
    Attribute { feature: String, attribute: String },
    Literal(Literal),
    Not(Box<TypedExpr>),
    Logic(LogicOp, Box<TypedExpr>, Box<TypedExpr>),
    Compare(CompareOp, Box<TypedExpr>, Box<TypedExpr>),
    Arith(ArithOp, Box<TypedExpr>, Box<TypedExpr>),
}

impl TypedExpr {
    /// The untyped expression this was checked from (spans preserved).
    pub fn to_expr(&self) -> ConstraintExpr {
        let kind = match &self.kind {
            TypedKind::Count(n) | TypedKind::Exists(n) => ExprKind::FeatureRef(n.clone()),
            TypedKind::Attribute { feature, attribute } => ExprKind::AttributeRef {
                feature: feature.clone(),
                attribute: attribute.clone(),
            },
            TypedKind::Literal(l) => ExprKind::Literal(l.clone()),
            TypedKind::Not(e) => ExprKind::Not(Box::new(e.to_expr())),
            TypedKind::Logic(op, l, r) => ExprKind::Logic(*op, Box::new(l.to_expr()), Box::new(r.to_expr())),
            TypedKind::Compare(op, l, r) => {
                ExprKind::Compare(*op, Box::new(l.to_expr()), Box::new(r.to_expr()))
            }
            TypedKind::Arith(op, l, r) => ExprKind::Arith(*op, Box::new(l.to_expr()), Box::new(r.to_expr())),
        };
        ConstraintExpr::new(kind, self.span)
    }
}

impl fmt::Display for TypedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

/// Types every constraint of the model; each must come out `BOOL`.
pub fn typecheck(model: &ResolvedModel) -> Result<Vec<TypedExpr>, TypeError> {
    model
        .constraints()
        .iter()
        .map(|c| Typer { model }.condition(c))
        .collect()
}

struct Typer<'m> {
    model: &'m ResolvedModel,
}

impl Typer<'_> {
    /// Boolean position: a bare feature reference means "is selected".
    fn condition(&self, expr: &ConstraintExpr) -> Result<TypedExpr, TypeError> {
        if let ExprKind::FeatureRef(name) = &expr.kind {
            return Ok(TypedExpr {
                kind: TypedKind::Exists(name.clone()),
                ty: Type::Bool,
                span: expr.span,
            });
        }
        let typed = self.infer(expr)?;
        expect(&typed, "BOOL", |t| t == Type::Bool)?;
        Ok(typed)
    }

    fn infer(&self, expr: &ConstraintExpr) -> Result<TypedExpr, TypeError> {
        let (kind, ty) = match &expr.kind {
            ExprKind::FeatureRef(name) => (TypedKind::Count(name.clone()), Type::Int),
            ExprKind::AttributeRef { feature, attribute } => {
                let decl = self
                    .model
                    .attribute(feature, attribute)
                    .expect("references are resolved before typing");
                (
                    TypedKind::Attribute {
                        feature: feature.clone(),
                        attribute: attribute.clone(),
                    },
                    Type::of(&decl.value),
                )
            }
            ExprKind::Literal(lit) => (TypedKind::Literal(lit.clone()), Type::of(lit)),
            ExprKind::Not(inner) => (TypedKind::Not(Box::new(self.condition(inner)?)), Type::Bool),
            ExprKind::Logic(op, l, r) => (
                TypedKind::Logic(*op, Box::new(self.condition(l)?), Box::new(self.condition(r)?)),
                Type::Bool,
            ),
            ExprKind::Compare(op, l, r) => {
                let (l, r) = (self.infer(l)?, self.infer(r)?);
                if l.ty.is_numeric() {
                    expect(&r, "a numeric operand", Type::is_numeric)?;
                } else {
                    let want = l.ty;
                    expect(&r, &want.to_string(), |t| t == want)?;
                    if want == Type::Symbol && !op.is_equality() {
                        return Err(TypeError {
                            span: expr.span,
                            expected: "== or != on SYMBOL operands".into(),
                            found: op.symbol().into(),
                        });
                    }
                }
                (TypedKind::Compare(*op, Box::new(l), Box::new(r)), Type::Bool)
            }
            ExprKind::Arith(op, l, r) => {
                let (l, r) = (self.infer(l)?, self.infer(r)?);
                expect(&l, "a numeric operand", Type::is_numeric)?;
                expect(&r, "a numeric operand", Type::is_numeric)?;
                let ty = if l.ty == Type::Int && r.ty == Type::Int && *op != ArithOp::Div {
                    Type::Int
                } else {
                    Type::Float
                };
                (TypedKind::Arith(*op, Box::new(l), Box::new(r)), ty)
            }
        };
        Ok(TypedExpr {
            kind,
            ty,
            span: expr.span,
        })
    }
}

fn expect(e: &TypedExpr, expected: &str, ok: impl Fn(Type) -> bool) -> Result<(), TypeError> {
    if ok(e.ty) {
        Ok(())
    } else {
        Err(TypeError {
            span: e.span,
            expected: expected.to_string(),
            found: e.ty.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOBILE: &str = include_str!("../tests/fixtures/mobile.fml");
    const INTERNET: &str = include_str!("../tests/fixtures/internet.fml");
    const LAPTOP: &str = include_str!("../tests/fixtures/laptop.fml");

    fn load(src: &str) -> Result<ResolvedModel, ResolveError> {
        resolve(parse_model(src).unwrap())
    }

    fn types(src: &str) -> Result<Vec<TypedExpr>, TypeError> {
        typecheck(&load(src).unwrap())
    }

    #[test]
    fn internet_tables() {
        let m = load(INTERNET).unwrap();
        assert_eq!(m.features().len(), 4);
        let attrs: usize = m.features().iter().map(|f| f.attributes.len()).sum();
        assert_eq!(attrs, 4);
        assert_eq!(m.constraints().len(), 4);
        let adsl = m.attribute("ADSL", "price").unwrap();
        assert_eq!(adsl.value, Literal::Int(150));
        assert_eq!(m.parent(m.lookup("ADSL").unwrap()).unwrap().name, "InternerConnection");
    }

    #[test]
    fn pre_order_and_parent_links() {
        let m = load(MOBILE).unwrap();
        let names: Vec<_> = m.features().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            ["MobilePhone", "Calls", "GPS", "Screen", "Basic", "Color", "HighResolution", "Media", "Camera", "MP3"]
        );
        for (i, f) in m.features().iter().enumerate().skip(1) {
            let parent = m.feature(f.parent.unwrap());
            let hits = parent.children.iter().filter(|c| c.0 == i).count();
            assert_eq!(hits, 1, "{}", f.name);
        }
        assert!(m.root().parent.is_none());
    }

    #[test]
    fn duplicate_feature() {
        let err = load("FM = A : all[A(0..1)];").unwrap_err();
        let ResolveError::DuplicateFeature { name, first, second } = err else { panic!("{err:?}") };
        assert_eq!(name, "A");
        assert_eq!(first.column, 6);
        assert_eq!(second.column, 14);
    }

    #[test]
    fn duplicate_attribute() {
        let err = load("FM = A : {x=1, x=2};").unwrap_err();
        assert!(matches!(err, ResolveError::DuplicateAttribute { ref name, .. } if name == "x"));
    }

    #[test]
    fn unknown_references() {
        let err = load("FM = A; B implies A;").unwrap_err();
        assert_eq!(
            err,
            ResolveError::UnknownReference {
                name: "B".into(),
                span: SourceSpan { line: 1, column: 9, offset: 8, len: 1 },
            }
        );
        let err = load("FM = A : {x=1}; A.y > 0;").unwrap_err();
        assert!(matches!(err, ResolveError::UnknownReference { ref name, .. } if name == "A.y"));
    }

    #[test]
    fn bad_cardinalities() {
        for src in ["FM = A (3..2);", "FM = A (0..0);", "FM = R : all [A (5..1)];"] {
            let err = load(src).unwrap_err();
            assert!(matches!(err, ResolveError::BadCardinality { .. }), "{src}: {err:?}");
        }
        let err = load("FM = A (3..2);").unwrap_err();
        assert_eq!(err.span().column, 8);
    }

    #[test]
    fn fixtures_resolve_and_typecheck() {
        for src in [MOBILE, INTERNET, LAPTOP] {
            let typed = types(src).unwrap();
            assert!(typed.iter().all(|t| t.ty == Type::Bool));
        }
    }

    #[test]
    fn implies_coerces_features_to_existence() {
        let typed = types("FM = R : all [Camera, HighResolution]; Camera implies HighResolution;").unwrap();
        let TypedKind::Logic(LogicOp::Implies, l, r) = &typed[0].kind else { panic!() };
        assert_eq!(l.kind, TypedKind::Exists("Camera".into()));
        assert_eq!(r.kind, TypedKind::Exists("HighResolution".into()));
    }

    #[test]
    fn sum_of_prices_is_an_integer_comparison() {
        let typed = types(INTERNET).unwrap();
        let TypedKind::Compare(CompareOp::Eq, l, r) = &typed[0].kind else { panic!() };
        assert_eq!((l.ty, r.ty), (Type::Int, Type::Int));
    }

    #[test]
    fn feature_in_numeric_position_is_a_count() {
        let typed = types("FM = A : all [B (0..3)]; B >= 2;").unwrap();
        let TypedKind::Compare(_, l, _) = &typed[0].kind else { panic!() };
        assert_eq!(l.kind, TypedKind::Count("B".into()));
        assert_eq!(l.ty, Type::Int);
    }

    #[test]
    fn numeric_promotion() {
        let typed = types("FM = A : {x=1, y=2.5}; A.x + A.y > 1; A.x / 2 > 0; A.x * 2 > 0;").unwrap();
        let lhs_ty = |t: &TypedExpr| match &t.kind {
            TypedKind::Compare(_, l, _) => l.ty,
            _ => panic!(),
        };
        assert_eq!(lhs_ty(&typed[0]), Type::Float);
        assert_eq!(lhs_ty(&typed[1]), Type::Float);
        assert_eq!(lhs_ty(&typed[2]), Type::Int);
    }

    #[test]
    fn type_errors() {
        let cases = [
            "FM = A; \"ok\" + 1 > 0;",
            "FM = A; \"abc\" < 3;",
            "FM = A; 1 implies A;",
            "FM = A; A + 1;",
            "FM = A : {c=red}; A.c < A.c;",
            "FM = A : {c=red, s=\"red\"}; A.c == A.s;",
            "FM = A; (A and A) == A;",
            "FM = A; not 3;",
        ];
        for src in cases {
            assert!(types(src).is_err(), "{src}");
        }
        let err = types("FM = A; \"abc\" < 3;").unwrap_err();
        assert_eq!(err.expected, "STRING");
        assert_eq!(err.found, "INT");
        assert_eq!(err.span.column, 17);
    }

    #[test]
    fn symbols_support_equality() {
        assert!(types("FM = A : {c=red, d=blue}; A.c != A.d;").is_ok());
        assert!(types("FM = A : {s=\"a\"}; A.s < \"b\";").is_ok());
    }

    #[test]
    fn typing_ignores_constraint_order() {
        let a = types("FM = R : all [A, B (0..2)]; A implies B; B >= 1;").unwrap();
        let b = types("FM = R : all [A, B (0..2)]; B >= 1; A implies B;").unwrap();
        let key = |t: &TypedExpr| (t.to_string(), t.ty);
        assert_eq!(key(&a[0]), key(&b[1]));
        assert_eq!(key(&a[1]), key(&b[0]));
    }
}
