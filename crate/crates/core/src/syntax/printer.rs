//! Canonical text rendering of syntax trees. Output always reparses to a
//! structurally identical tree.

use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            // `{:?}` keeps a fractional part or exponent, so it reparses as a float.
            Literal::Float(v) => write!(f, "{v:?}"),
            Literal::Str(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    if c == '"' {
                        f.write_str("\\\"")?;
                    } else {
                        f.write_char(c)?;
                    }
                }
                f.write_char('"')
            }
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Symbol(s) => f.write_str(s),
        }
    }
}

// Binding strength, loosest first.
const COMPARE: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const ADDITIVE: u8 = 6;
const MULTIPLICATIVE: u8 = 7;
const PRIMARY: u8 = 8;

fn level(expr: &ConstraintExpr) -> u8 {
    match &expr.kind {
        ExprKind::Compare(..) => COMPARE,
        ExprKind::Logic(LogicOp::Implies, ..) => IMPLIES,
        ExprKind::Logic(LogicOp::Or, ..) => OR,
        ExprKind::Logic(LogicOp::And, ..) => AND,
        ExprKind::Not(_) => NOT,
        ExprKind::Arith(ArithOp::Add | ArithOp::Sub, ..) => ADDITIVE,
        ExprKind::Arith(ArithOp::Mul | ArithOp::Div, ..) => MULTIPLICATIVE,
        _ => PRIMARY,
    }
}

fn operand(f: &mut fmt::Formatter<'_>, expr: &ConstraintExpr, min_level: u8) -> fmt::Result {
    if level(expr) < min_level {
        write!(f, "({expr})")
    } else {
        write!(f, "{expr}")
    }
}

impl fmt::Display for ConstraintExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // (left minimum, right minimum) for each binary form; equal levels
        // on one side encode associativity.
        let (op, l, r, lmin, rmin) = match &self.kind {
            ExprKind::FeatureRef(name) => return f.write_str(name),
            ExprKind::AttributeRef { feature, attribute } => {
                return write!(f, "{feature}.{attribute}")
            }
            ExprKind::Literal(lit) => return write!(f, "{lit}"),
            ExprKind::Not(inner) => {
                f.write_str("not ")?;
                return operand(f, inner, NOT);
            }
            ExprKind::Compare(op, l, r) => (op.symbol(), l, r, COMPARE + 1, COMPARE + 1),
            ExprKind::Logic(LogicOp::Implies, l, r) => ("implies", l, r, IMPLIES + 1, IMPLIES),
            ExprKind::Logic(op, l, r) => {
                let lvl = level(self);
                (op.keyword(), l, r, lvl, lvl + 1)
            }
            ExprKind::Arith(op, l, r) => {
                let lvl = level(self);
                (op.symbol(), l, r, lvl, lvl + 1)
            }
        };
        operand(f, l, lmin)?;
        write!(f, " {op} ")?;
        operand(f, r, rmin)
    }
}

fn write_feature(out: &mut String, node: &FeatureNode, depth: usize) {
    let _ = write!(out, "{} {}", node.name, node.cardinality);
    if !node.attributes.is_empty() {
        out.push_str(" : {");
        for (i, attr) in node.attributes.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}={}", attr.name, attr.value);
        }
        out.push('}');
    }
    if let Some(group) = &node.group {
        let _ = writeln!(out, " : {} [", group.kind);
        for (i, child) in group.children.iter().enumerate() {
            out.push_str(&"    ".repeat(depth + 1));
            write_feature(out, child, depth + 1);
            if i + 1 < group.children.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str(&"    ".repeat(depth));
        out.push(']');
    }
}

impl fmt::Display for FeatureNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_feature(&mut out, self, 0);
        f.write_str(&out)
    }
}

impl fmt::Display for FeatureModelAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} = {};", self.name, self.root)?;
        if !self.constraints.is_empty() {
            writeln!(f)?;
        }
        for c in &self.constraints {
            writeln!(f, "{c};")?;
        }
        Ok(())
    }
}
