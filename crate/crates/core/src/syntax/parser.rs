//! Scannerless PEG parser.
//!
//! Every rule is a method returning `Option<T>`; a rule that fails leaves the
//! cursor where it found it. Each failed terminal records what it expected at
//! its position, and on overall failure the error is reported at the farthest
//! position any terminal reached.
//!
//! ```text
//! model      <- ID '=' compound ';' constraint* EOF
//! compound   <- basic (':' group)?
//! basic      <- ID cardinality? (':' '{' attribute (',' attribute)* '}')?
//! cardinality<- '(' INT '..' INT ')'
//! attribute  <- ID '=' value
//! value      <- NUMBER / STRING / BOOL / ID
//! group      <- ('all' / 'oneof' / 'moreof') '[' compound (',' compound)* ']'
//! constraint <- compare ';'
//! compare    <- implies (CMP implies)*          -- chains desugar to 'and'
//! implies    <- or ('implies' implies)?
//! or         <- and ('or' and)*
//! and        <- not ('and' not)*
//! not        <- 'not' not / additive
//! additive   <- multiplicative (('+' / '-') multiplicative)*
//! multiplicative <- primary (('*' / '/') primary)*
//! primary    <- '(' compare ')' / BOOL / NUMBER / STRING / ID ('.' ID)?
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::*;

const KEYWORDS: &[&str] = &[
    "all", "oneof", "moreof", "and", "or", "not", "implies", "true", "false",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// First syntax error in a source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", ExpectedList(.expected))]
pub struct SyntaxError {
    pub span: SourceSpan,
    /// Human-readable descriptions of what would have been accepted, in the
    /// order the parser tried them.
    pub expected: Vec<String>,
    pub found: String,
}

struct ExpectedList<'a>(&'a [String]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("unexpected input"),
            [one] => write!(f, "expected {one}"),
            many => write!(f, "expected one of {}", many.join(", ")),
        }
    }
}

/// Parses a complete model: the feature tree followed by its constraints.
pub fn parse_model(source: &str) -> Result<FeatureModelAst, SyntaxError> {
    let mut p = Parser::new(source);
    match p.model() {
        Some(ast) => Ok(ast),
        None => Err(p.error()),
    }
}

/// Parses a single constraint expression. A trailing `;` is permitted.
pub fn parse_expression(source: &str) -> Result<ConstraintExpr, SyntaxError> {
    let mut p = Parser::new(source);
    let parsed = p.compare().and_then(|e| {
        p.punct(";");
        p.end().then_some(e)
    });
    parsed.ok_or_else(|| p.error())
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line_starts: Vec<usize>,
    fail_pos: usize,
    expected: Vec<&'static str>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let line_starts = std::iter::once(0)
            .chain(src.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        Parser {
            src,
            pos: 0,
            line_starts,
            fail_pos: 0,
            expected: Vec::new(),
        }
    }

    // ---- diagnostics -------------------------------------------------------

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        let line_idx = self.line_starts.partition_point(|&s| s <= start) - 1;
        let line_start = self.line_starts[line_idx];
        let column = self.src[line_start..start].chars().count() + 1;
        SourceSpan {
            line: line_idx as u32 + 1,
            column: column as u32,
            offset: start,
            len: end - start,
        }
    }

    fn fail(&mut self, at: usize, what: &'static str) {
        if at > self.fail_pos {
            self.fail_pos = at;
            self.expected.clear();
        }
        if at == self.fail_pos && !self.expected.contains(&what) {
            self.expected.push(what);
        }
    }

    fn error(&self) -> SyntaxError {
        let rest = &self.src[self.fail_pos..];
        let found = match rest.chars().next() {
            None => "end of input".to_string(),
            Some(c) if is_ident_char(c) => {
                let word: String = rest.chars().take_while(|&c| is_ident_char(c)).collect();
                format!("'{word}'")
            }
            Some(c) => format!("'{c}'"),
        };
        let len = rest.chars().next().map_or(0, char::len_utf8);
        SyntaxError {
            span: self.span(self.fail_pos, self.fail_pos + len),
            expected: self.expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    // ---- lexical helpers ---------------------------------------------------

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with("//") {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    /// Skips layout and returns the start of the next token.
    fn start(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    fn end(&mut self) -> bool {
        let at = self.start();
        if at == self.src.len() {
            true
        } else {
            self.fail(at, "end of input");
            false
        }
    }

    fn punct(&mut self, text: &'static str) -> bool {
        self.punct_labeled(text, text)
    }

    fn punct_labeled(&mut self, text: &str, label: &'static str) -> bool {
        let at = self.start();
        if self.rest().starts_with(text) {
            self.pos += text.len();
            true
        } else {
            self.fail(at, label);
            false
        }
    }

    fn keyword(&mut self, kw: &'static str, label: &'static str) -> bool {
        let at = self.start();
        let rest = self.rest();
        if rest.starts_with(kw) && !rest[kw.len()..].starts_with(is_ident_char) {
            self.pos += kw.len();
            true
        } else {
            self.fail(at, label);
            false
        }
    }

    fn word(&self) -> &'a str {
        let rest = self.rest();
        if !rest.starts_with(is_ident_start) {
            return "";
        }
        let len = rest.find(|c| !is_ident_char(c)).unwrap_or(rest.len());
        &rest[..len]
    }

    fn ident(&mut self) -> Option<(String, SourceSpan)> {
        let at = self.start();
        let word = self.word();
        if word.is_empty() || is_keyword(word) {
            self.fail(at, "identifier");
            return None;
        }
        self.pos += word.len();
        Some((word.to_string(), self.span(at, self.pos)))
    }

    fn uint(&mut self) -> Option<u32> {
        let at = self.start();
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            self.fail(at, "integer");
            return None;
        }
        match self.rest()[..digits].parse() {
            Ok(v) => {
                self.pos += digits;
                Some(v)
            }
            Err(_) => {
                self.fail(at, "integer in range");
                None
            }
        }
    }

    /// Signed integer or float literal.
    fn number(&mut self) -> Option<Literal> {
        let at = self.start();
        let bytes = self.rest().as_bytes();
        let digits_from = |i: usize| bytes[i.min(bytes.len())..].iter().take_while(|b| b.is_ascii_digit()).count();
        let mut i = usize::from(bytes.first() == Some(&b'-'));
        let int_digits = digits_from(i);
        if int_digits == 0 {
            self.fail(at, "number");
            return None;
        }
        i += int_digits;
        let mut is_float = false;
        if bytes.get(i) == Some(&b'.') && digits_from(i + 1) > 0 {
            i += 1 + digits_from(i + 1);
            is_float = true;
        }
        if matches!(bytes.get(i), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(bytes.get(i + 1), Some(b'+' | b'-')));
            let exp_digits = digits_from(i + 1 + sign);
            if exp_digits > 0 {
                i += 1 + sign + exp_digits;
                is_float = true;
            }
        }
        let text = &self.rest()[..i];
        let lit = if is_float {
            text.parse().ok().filter(|v: &f64| v.is_finite()).map(Literal::Float)
        } else {
            text.parse().ok().map(Literal::Int)
        };
        match lit {
            Some(lit) => {
                self.pos += i;
                Some(lit)
            }
            None => {
                self.fail(at, "number in range");
                None
            }
        }
    }

    /// Double-quoted string; `\"` is the only escape.
    fn string(&mut self) -> Option<String> {
        let at = self.start();
        if self.peek() != Some('"') {
            self.fail(at, "string");
            return None;
        }
        let mut out = String::new();
        let mut chars = self.rest()[1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 2;
                    return Some(out);
                }
                '\\' if self.rest()[1 + i + 1..].starts_with('"') => {
                    chars.next();
                    out.push('"');
                }
                c => out.push(c),
            }
        }
        self.fail(self.src.len(), "closing '\"'");
        None
    }

    fn boolean(&mut self) -> Option<bool> {
        if self.keyword("true", "'true'") {
            Some(true)
        } else if self.keyword("false", "'false'") {
            Some(false)
        } else {
            None
        }
    }

    /// Runs `rule`, rewinding the cursor if it fails.
    fn attempt<T>(&mut self, rule: impl FnOnce(&mut Self) -> Option<T>) -> Option<T> {
        let saved = self.pos;
        let out = rule(self);
        if out.is_none() {
            self.pos = saved;
        }
        out
    }

    // ---- feature tree ------------------------------------------------------

    fn model(&mut self) -> Option<FeatureModelAst> {
        let (name, _) = self.ident()?;
        if !self.punct("=") {
            return None;
        }
        let root = self.compound()?;
        if !self.punct_labeled(";", "';'") {
            return None;
        }
        let mut constraints = Vec::new();
        while let Some(c) = self.attempt(Self::constraint) {
            constraints.push(c);
        }
        self.end().then_some(FeatureModelAst {
            name,
            root,
            constraints,
        })
    }

    fn compound(&mut self) -> Option<FeatureNode> {
        let mut node = self.basic()?;
        node.group = self.attempt(|p| {
            if p.punct_labeled(":", "':'") {
                p.group()
            } else {
                None
            }
        });
        Some(node)
    }

    fn basic(&mut self) -> Option<FeatureNode> {
        let (name, span) = self.ident()?;
        let cardinality = self.attempt(Self::cardinality);
        let attributes = self
            .attempt(|p| {
                if !(p.punct_labeled(":", "':'") && p.punct_labeled("{", "'{'")) {
                    return None;
                }
                let mut attrs = vec![p.attribute()?];
                while let Some(a) = p.attempt(|p| {
                    if p.punct_labeled(",", "','") {
                        p.attribute()
                    } else {
                        None
                    }
                }) {
                    attrs.push(a);
                }
                p.punct_labeled("}", "'}'").then_some(attrs)
            })
            .unwrap_or_default();
        Some(FeatureNode {
            name,
            cardinality: cardinality.map(|(c, _)| c).unwrap_or_default(),
            cardinality_span: cardinality.map(|(_, s)| s),
            attributes,
            group: None,
            span,
        })
    }

    fn cardinality(&mut self) -> Option<(Cardinality, SourceSpan)> {
        let at = self.start();
        if !self.punct_labeled("(", "'('") {
            return None;
        }
        let min = self.uint()?;
        if !self.punct_labeled("..", "'..'") {
            return None;
        }
        let max = self.uint()?;
        if !self.punct_labeled(")", "')'") {
            return None;
        }
        Some((Cardinality { min, max }, self.span(at, self.pos)))
    }

    fn attribute(&mut self) -> Option<AttributeDecl> {
        let (name, name_span) = self.ident()?;
        if !self.punct_labeled("=", "'='") {
            return None;
        }
        let value = self.value()?;
        Some(AttributeDecl {
            name,
            value,
            span: self.span(name_span.offset, self.pos),
        })
    }

    fn value(&mut self) -> Option<Literal> {
        let at = self.start();
        match self.peek() {
            Some('"') => self.string().map(Literal::Str),
            Some(c) if c == '-' || c.is_ascii_digit() => self.number(),
            Some(c) if is_ident_start(c) => match self.word() {
                "true" | "false" => self.boolean().map(Literal::Bool),
                _ => self.ident().map(|(name, _)| Literal::Symbol(name)),
            },
            _ => {
                self.fail(at, "value");
                None
            }
        }
    }

    fn group(&mut self) -> Option<Group> {
        let at = self.start();
        let kind = if self.keyword("all", "'all'") {
            GroupKind::All
        } else if self.keyword("oneof", "'oneof'") {
            GroupKind::OneOf
        } else if self.keyword("moreof", "'moreof'") {
            GroupKind::MoreOf
        } else {
            return None;
        };
        if !self.punct_labeled("[", "'['") {
            return None;
        }
        let mut children = vec![self.compound()?];
        while let Some(child) = self.attempt(|p| {
            if p.punct_labeled(",", "','") {
                p.compound()
            } else {
                None
            }
        }) {
            children.push(child);
        }
        if !self.punct_labeled("]", "']'") {
            return None;
        }
        Some(Group {
            kind,
            children,
            span: self.span(at, self.pos),
        })
    }

    // ---- expressions -------------------------------------------------------

    fn constraint(&mut self) -> Option<ConstraintExpr> {
        let expr = self.compare()?;
        self.punct_labeled(";", "';'").then_some(expr)
    }

    fn compare_op(&mut self) -> Option<CompareOp> {
        const OPS: &[(&str, CompareOp)] = &[
            ("==", CompareOp::Eq),
            ("!=", CompareOp::Ne),
            ("<=", CompareOp::Le),
            (">=", CompareOp::Ge),
            ("<", CompareOp::Lt),
            (">", CompareOp::Gt),
            ("=", CompareOp::Eq),
        ];
        let at = self.start();
        for &(text, op) in OPS {
            if self.rest().starts_with(text) {
                self.pos += text.len();
                return Some(op);
            }
        }
        self.fail(at, "comparison operator");
        None
    }

    fn compare(&mut self) -> Option<ConstraintExpr> {
        let first = self.implies()?;
        let mut links: Vec<(CompareOp, ConstraintExpr)> = Vec::new();
        while let Some(link) = self.attempt(|p| {
            let op = p.compare_op()?;
            Some((op, p.implies()?))
        }) {
            links.push(link);
        }
        if links.is_empty() {
            return Some(first);
        }
        // a < b < c  ==>  (a < b) and (b < c)
        let mut lhs = first;
        let mut chain: Option<ConstraintExpr> = None;
        for (op, rhs) in links {
            let span = self.span(lhs.span.offset, rhs.span.end());
            let cmp = ConstraintExpr::new(
                ExprKind::Compare(op, Box::new(lhs), Box::new(rhs.clone())),
                span,
            );
            chain = Some(match chain {
                None => cmp,
                Some(prev) => {
                    let span = self.span(prev.span.offset, cmp.span.end());
                    ConstraintExpr::new(
                        ExprKind::Logic(LogicOp::And, Box::new(prev), Box::new(cmp)),
                        span,
                    )
                }
            });
            lhs = rhs;
        }
        chain
    }

    fn implies(&mut self) -> Option<ConstraintExpr> {
        let lhs = self.or()?;
        match self.attempt(|p| {
            if p.keyword("implies", "'implies'") {
                p.implies()
            } else {
                None
            }
        }) {
            Some(rhs) => Some(self.binary(ExprKind::Logic, LogicOp::Implies, lhs, rhs)),
            None => Some(lhs),
        }
    }

    fn or(&mut self) -> Option<ConstraintExpr> {
        let mut lhs = self.and()?;
        while let Some(rhs) = self.attempt(|p| {
            if p.keyword("or", "'or'") {
                p.and()
            } else {
                None
            }
        }) {
            lhs = self.binary(ExprKind::Logic, LogicOp::Or, lhs, rhs);
        }
        Some(lhs)
    }

    fn and(&mut self) -> Option<ConstraintExpr> {
        let mut lhs = self.not()?;
        while let Some(rhs) = self.attempt(|p| {
            if p.keyword("and", "'and'") {
                p.not()
            } else {
                None
            }
        }) {
            lhs = self.binary(ExprKind::Logic, LogicOp::And, lhs, rhs);
        }
        Some(lhs)
    }

    fn not(&mut self) -> Option<ConstraintExpr> {
        let at = self.start();
        if self.keyword("not", "'not'") {
            let inner = self.not()?;
            let span = self.span(at, inner.span.end());
            Some(ConstraintExpr::new(ExprKind::Not(Box::new(inner)), span))
        } else {
            self.additive()
        }
    }

    fn additive(&mut self) -> Option<ConstraintExpr> {
        let mut lhs = self.multiplicative()?;
        while let Some((op, rhs)) = self.attempt(|p| {
            let op = if p.punct_labeled("+", "arithmetic operator") {
                ArithOp::Add
            } else if p.punct_labeled("-", "arithmetic operator") {
                ArithOp::Sub
            } else {
                return None;
            };
            Some((op, p.multiplicative()?))
        }) {
            lhs = self.binary(ExprKind::Arith, op, lhs, rhs);
        }
        Some(lhs)
    }

    fn multiplicative(&mut self) -> Option<ConstraintExpr> {
        let mut lhs = self.primary()?;
        while let Some((op, rhs)) = self.attempt(|p| {
            let op = if p.punct_labeled("*", "arithmetic operator") {
                ArithOp::Mul
            } else if p.punct_labeled("/", "arithmetic operator") {
                ArithOp::Div
            } else {
                return None;
            };
            Some((op, p.primary()?))
        }) {
            lhs = self.binary(ExprKind::Arith, op, lhs, rhs);
        }
        Some(lhs)
    }

    fn primary(&mut self) -> Option<ConstraintExpr> {
        let at = self.start();
        let kind = match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.compare()?;
                if !self.punct_labeled(")", "')'") {
                    return None;
                }
                // Parentheses leave no node behind; widen the span to cover them.
                return Some(ConstraintExpr::new(inner.kind, self.span(at, self.pos)));
            }
            Some('"') => ExprKind::Literal(Literal::Str(self.string()?)),
            Some(c) if c == '-' || c.is_ascii_digit() => ExprKind::Literal(self.number()?),
            Some(c) if is_ident_start(c) => match self.word() {
                "true" | "false" => ExprKind::Literal(Literal::Bool(self.boolean()?)),
                w if is_keyword(w) => {
                    self.fail(at, "operand");
                    return None;
                }
                _ => {
                    let (feature, _) = self.ident()?;
                    match self.attempt(|p| {
                        if p.punct_labeled(".", "'.'") {
                            p.ident()
                        } else {
                            None
                        }
                    }) {
                        Some((attribute, _)) => ExprKind::AttributeRef { feature, attribute },
                        None => ExprKind::FeatureRef(feature),
                    }
                }
            },
            _ => {
                self.fail(at, "operand");
                return None;
            }
        };
        Some(ConstraintExpr::new(kind, self.span(at, self.pos)))
    }

    fn binary<Op>(
        &self,
        make: fn(Op, Box<ConstraintExpr>, Box<ConstraintExpr>) -> ExprKind,
        op: Op,
        lhs: ConstraintExpr,
        rhs: ConstraintExpr,
    ) -> ConstraintExpr {
        let span = self.span(lhs.span.offset, rhs.span.end());
        ConstraintExpr::new(make(op, Box::new(lhs), Box::new(rhs)), span)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}
