//! Syntax tree for the Cypher subset.
//!
//! Nodes that diagnostics need to point at carry their source span via
//! [`Sp`]. Equality everywhere ignores spans, so an AST compares equal to its
//! reparse from canonical text.

use super::diag::Span;

/// A spanned node. `PartialEq`/`Hash` look only at the payload; the span is
/// carried for diagnostics and does not participate in structural equality.
#[derive(Debug, Clone)]
pub struct Sp<T> {
    pub node: T,
    pub span: Span,
}

impl<T> Sp<T> {
    pub fn new(node: T, span: Span) -> Self {
        Sp { node, span }
    }
}

impl<T: PartialEq> PartialEq for Sp<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T: Eq> Eq for Sp<T> {}

impl<T: std::hash::Hash> std::hash::Hash for Sp<T> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    Match(MatchClause),
    With(WithClause),
    Return(ReturnClause),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchClause {
    pub optional: bool,
    pub patterns: Vec<PathPattern>,
    pub where_expr: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithClause {
    pub distinct: bool,
    pub items: Vec<Item>,
    pub where_expr: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnClause {
    pub distinct: bool,
    pub items: Vec<Item>,
    pub order_by: Vec<SortItem>,
    pub limit: Option<i64>,
}

/// A projection item: an expression with an optional alias.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub expr: Expr,
    pub alias: Option<Sp<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortItem {
    pub expr: Expr,
    pub descending: bool,
}

/// Node chain: a node followed by zero or more (relationship, node) hops.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub segments: Vec<(RelPattern, NodePattern)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub variable: Option<Sp<String>>,
    pub label: Option<Sp<String>>,
    pub properties: Vec<(Sp<String>, Literal)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDirection {
    /// `<-[...]-`
    Left,
    /// `-[...]->`
    Right,
    /// `-[...]-`
    Undirected,
}

#[derive(Debug, Clone)]
pub struct RelPattern {
    pub variable: Option<Sp<String>>,
    pub rel_type: Option<Sp<String>>,
    pub direction: RelDirection,
    pub hops: Option<HopRange>,
    pub properties: Vec<(Sp<String>, Literal)>,
    /// Span of the whole arrow, for diagnostics on untyped relationships.
    pub span: Span,
}

impl PartialEq for RelPattern {
    fn eq(&self, other: &Self) -> bool {
        self.variable == other.variable
            && self.rel_type == other.rel_type
            && self.direction == other.direction
            && self.hops == other.hops
            && self.properties == other.properties
    }
}

/// Variable-length hop bounds. `*` is `(None, None)`, `*2` is
/// `(Some(2), Some(2))`, `*1..3` is `(Some(1), Some(3))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopRange {
    pub min: Option<u32>,
    pub max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Collect,
}

impl AggregateFunc {
    pub fn from_name(name: &str) -> Option<AggregateFunc> {
        let func = match name.to_ascii_lowercase().as_str() {
            "count" => AggregateFunc::Count,
            "sum" => AggregateFunc::Sum,
            "avg" => AggregateFunc::Avg,
            "min" => AggregateFunc::Min,
            "max" => AggregateFunc::Max,
            "collect" => AggregateFunc::Collect,
            _ => return None,
        };
        Some(func)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggregateFunc::Count => "count",
            AggregateFunc::Sum => "sum",
            AggregateFunc::Avg => "avg",
            AggregateFunc::Min => "min",
            AggregateFunc::Max => "max",
            AggregateFunc::Collect => "collect",
        }
    }
}

/// Argument of an aggregation call; `Star` is only legal for `count`.
#[derive(Debug, Clone, PartialEq)]
pub enum AggArg {
    Star,
    Expr(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Sp<Literal>),
    Variable(Sp<String>),
    Property { variable: Sp<String>, key: Sp<String> },
    Comparison { op: CompareOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Aggregate { func: Sp<AggregateFunc>, distinct: bool, arg: AggArg },
}

impl Expr {
    /// Covering source span, derived from the leaves.
    pub fn span(&self) -> Span {
        match self {
            Expr::Literal(lit) => lit.span,
            Expr::Variable(var) => var.span,
            Expr::Property { variable, key } => variable.span.merge(key.span),
            Expr::Comparison { lhs, rhs, .. } => lhs.span().merge(rhs.span()),
            Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => lhs.span().merge(rhs.span()),
            Expr::Not(inner) => inner.span(),
            Expr::Aggregate { func, arg, .. } => match arg {
                AggArg::Star => func.span,
                AggArg::Expr(inner) => func.span.merge(inner.span()),
            },
        }
    }

    /// Walk this expression and every sub-expression, outermost first.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Comparison { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
                lhs.walk(visit);
                rhs.walk(visit);
            }
            Expr::Not(inner) => inner.walk(visit),
            Expr::Aggregate { arg: AggArg::Expr(inner), .. } => inner.walk(visit),
            _ => {}
        }
    }
}
