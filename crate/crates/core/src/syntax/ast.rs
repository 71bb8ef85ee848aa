//! Untyped syntax tree produced by the parser.

use std::fmt;

/// Location of a syntax element in the source text.
///
/// `line` and `column` are 1-based (columns count characters, not bytes);
/// `offset` is the 0-based byte offset and `len` the byte length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub offset: usize,
    pub len: usize,
}

impl SourceSpan {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModelAst {
    pub name: String,
    pub root: FeatureNode,
    pub constraints: Vec<ConstraintExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNode {
    pub name: String,
    pub cardinality: Cardinality,
    /// Span of the explicit `(m..n)` annotation, if one was written.
    pub cardinality_span: Option<SourceSpan>,
    pub attributes: Vec<AttributeDecl>,
    pub group: Option<Group>,
    /// Span of the feature name.
    pub span: SourceSpan,
}

impl FeatureNode {
    /// Pre-order walk over this node and all of its descendants.
    pub fn walk(&self) -> impl Iterator<Item = &FeatureNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            if let Some(group) = &node.group {
                stack.extend(group.children.iter().rev());
            }
            Some(node)
        })
    }
}

/// Clone-count bounds `(min..max)` of a feature.
///
/// The parser accepts any pair of integers; semantic analysis rejects pairs
/// that violate `min <= max` and `max >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cardinality {
    pub min: u32,
    pub max: u32,
}

impl Cardinality {
    pub const MANDATORY: Cardinality = Cardinality { min: 1, max: 1 };
    pub const OPTIONAL: Cardinality = Cardinality { min: 0, max: 1 };

    pub fn new(min: u32, max: u32) -> Option<Self> {
        let c = Cardinality { min, max };
        c.is_valid().then_some(c)
    }

    pub fn is_valid(&self) -> bool {
        self.min <= self.max && self.max >= 1
    }
}

impl Default for Cardinality {
    fn default() -> Self {
        Cardinality::MANDATORY
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}..{})", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDecl {
    pub name: String,
    pub value: Literal,
    pub span: SourceSpan,
}

/// A literal value. `Symbol` is a bare identifier in attribute-value position.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Symbol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    All,
    OneOf,
    MoreOf,
}

impl GroupKind {
    pub fn keyword(self) -> &'static str {
        match self {
            GroupKind::All => "all",
            GroupKind::OneOf => "oneof",
            GroupKind::MoreOf => "moreof",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub kind: GroupKind,
    /// Never empty.
    pub children: Vec<FeatureNode>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
    Implies,
}

impl LogicOp {
    pub fn keyword(self) -> &'static str {
        match self {
            LogicOp::And => "and",
            LogicOp::Or => "or",
            LogicOp::Implies => "implies",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CompareOp::Eq | CompareOp::Ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintExpr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    FeatureRef(String),
    AttributeRef { feature: String, attribute: String },
    Literal(Literal),
    Not(Box<ConstraintExpr>),
    Logic(LogicOp, Box<ConstraintExpr>, Box<ConstraintExpr>),
    Compare(CompareOp, Box<ConstraintExpr>, Box<ConstraintExpr>),
    Arith(ArithOp, Box<ConstraintExpr>, Box<ConstraintExpr>),
}

impl ConstraintExpr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        ConstraintExpr { kind, span }
    }

    /// Direct sub-expressions, left to right.
    pub fn children(&self) -> Vec<&ConstraintExpr> {
        match &self.kind {
            ExprKind::FeatureRef(_) | ExprKind::AttributeRef { .. } | ExprKind::Literal(_) => {
                Vec::new()
            }
            ExprKind::Not(e) => vec![e],
            ExprKind::Logic(_, l, r) | ExprKind::Compare(_, l, r) | ExprKind::Arith(_, l, r) => {
                vec![l, r]
            }
        }
    }
}

/// Resets every span in a tree to the default, so that trees parsed from
/// differently formatted text can be compared structurally.
pub trait EraseSpans {
    fn erase_spans(&mut self);
}

impl EraseSpans for ConstraintExpr {
    fn erase_spans(&mut self) {
        self.span = SourceSpan::default();
        match &mut self.kind {
            ExprKind::FeatureRef(_) | ExprKind::AttributeRef { .. } | ExprKind::Literal(_) => {}
            ExprKind::Not(e) => e.erase_spans(),
            ExprKind::Logic(_, l, r) | ExprKind::Compare(_, l, r) | ExprKind::Arith(_, l, r) => {
                l.erase_spans();
                r.erase_spans();
            }
        }
    }
}

impl EraseSpans for FeatureNode {
    fn erase_spans(&mut self) {
        self.span = SourceSpan::default();
        self.cardinality_span = None;
        for attr in &mut self.attributes {
            attr.span = SourceSpan::default();
        }
        if let Some(group) = &mut self.group {
            group.span = SourceSpan::default();
            group.children.iter_mut().for_each(EraseSpans::erase_spans);
        }
    }
}

impl EraseSpans for FeatureModelAst {
    fn erase_spans(&mut self) {
        self.root.erase_spans();
        self.constraints.iter_mut().for_each(EraseSpans::erase_spans);
    }
}
