//! Recursive-descent parser for the Cypher subset, plus a post-parse scope
//! analysis that rejects unbound variables, unaliased WITH expressions and
//! misplaced aggregation calls.
//!
//! Grammar (clause order enforced: any mix of MATCH / OPTIONAL MATCH / WITH,
//! terminated by exactly one RETURN):
//!
//! ```text
//! query    := clause+ [';']
//! clause   := [OPTIONAL] MATCH pattern (',' pattern)* [WHERE expr]
//!           | WITH [DISTINCT] item (',' item)* [WHERE expr]
//!           | RETURN [DISTINCT] item (',' item)* [ORDER BY sort (',' sort)*] [LIMIT int]
//! pattern  := node (rel node)*
//! node     := '(' [var] [':' label] [propMap] ')'
//! rel      := '-' '[' [var] [':' type] [hops] [propMap] ']' '-' ['>']
//!           | '<' '-' '[' ... ']' '-'
//!           | '--' ['>'] | '<' '--'
//! hops     := '*' [int] ['..' [int]]
//! item     := expr [AS ident]
//! expr     := or; or := and (OR and)*; and := not (AND not)*
//! not      := NOT not | cmp; cmp := primary [cmpOp primary]
//! primary  := literal | var | var '.' key | agg '(' [DISTINCT] (expr|'*') ')' | '(' expr ')'
//! ```

use super::ast::*;
use super::diag::{Diagnostic, ErrorClass, Span};
use super::token::{tokenize, Keyword, Token, TokenKind};
use std::collections::HashSet;

/// Tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<QueryAst, Diagnostic> {
    let tokens = tokenize(source)?;
    parse(&tokens)
}

/// Parse a token stream into an AST. The first violation is reported with its
/// source span; path-shape problems are classed `MalformedPath`, everything
/// else `SyntaxError`.
pub fn parse(tokens: &[Token]) -> Result<QueryAst, Diagnostic> {
    let mut parser = Parser { tokens, pos: 0 };
    let ast = parser.parse_query()?;
    analyze(&ast)?;
    Ok(ast)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&'a TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let token = self.tokens.get(self.pos);
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Keyword(k)) if *k == kw)
    }

    fn eat_keyword(&mut self, kw: Keyword) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Span to attach to an "unexpected end of input" diagnostic.
    fn eof_span(&self) -> Span {
        match self.tokens.last() {
            Some(t) => Span::point(t.span.end),
            None => Span::point(0),
        }
    }

    fn here(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or_else(|| self.eof_span())
    }

    fn error(&self, detail: impl Into<String>) -> Diagnostic {
        Diagnostic::new(ErrorClass::SyntaxError, self.here(), detail.into())
    }

    fn expected(&self, what: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => self.error(format!("expected {what}, found {}", t.kind.describe())),
            None => Diagnostic::new(
                ErrorClass::SyntaxError,
                self.eof_span(),
                format!("expected {what}, found end of query"),
            ),
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<&'a Token, Diagnostic> {
        if self.peek_kind() == Some(kind) {
            Ok(self.advance().expect("peeked"))
        } else {
            Err(self.expected(what))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<Sp<String>, Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), span }) => {
                self.pos += 1;
                Ok(Sp::new(name.clone(), *span))
            }
            _ => Err(self.expected(what)),
        }
    }

    fn parse_query(&mut self) -> Result<QueryAst, Diagnostic> {
        let mut clauses = Vec::new();
        loop {
            if self.eat_keyword(Keyword::Optional) {
                if !self.eat_keyword(Keyword::Match) {
                    return Err(self.expected("MATCH after OPTIONAL"));
                }
                clauses.push(Clause::Match(self.parse_match(true)?));
            } else if self.eat_keyword(Keyword::Match) {
                clauses.push(Clause::Match(self.parse_match(false)?));
            } else if self.eat_keyword(Keyword::With) {
                clauses.push(Clause::With(self.parse_with()?));
            } else if self.eat_keyword(Keyword::Return) {
                clauses.push(Clause::Return(self.parse_return()?));
                self.eat(&TokenKind::Semicolon);
                if let Some(t) = self.peek() {
                    return Err(Diagnostic::new(
                        ErrorClass::SyntaxError,
                        t.span,
                        format!("RETURN must be the final clause, found {}", t.kind.describe()),
                    ));
                }
                return Ok(QueryAst { clauses });
            } else if self.peek().is_none() {
                return Err(Diagnostic::new(
                    ErrorClass::SyntaxError,
                    self.eof_span(),
                    "query must end with a RETURN clause",
                ));
            } else {
                return Err(self.expected("MATCH, OPTIONAL MATCH, WITH or RETURN"));
            }
        }
    }

    fn parse_match(&mut self, optional: bool) -> Result<MatchClause, Diagnostic> {
        let mut patterns = vec![self.parse_pattern()?];
        while self.eat(&TokenKind::Comma) {
            patterns.push(self.parse_pattern()?);
        }
        let where_expr =
            if self.eat_keyword(Keyword::Where) { Some(self.parse_expr()?) } else { None };
        Ok(MatchClause { optional, patterns, where_expr })
    }

    fn parse_with(&mut self) -> Result<WithClause, Diagnostic> {
        let distinct = self.eat_keyword(Keyword::Distinct);
        let items = self.parse_items()?;
        let where_expr =
            if self.eat_keyword(Keyword::Where) { Some(self.parse_expr()?) } else { None };
        Ok(WithClause { distinct, items, where_expr })
    }

    fn parse_return(&mut self) -> Result<ReturnClause, Diagnostic> {
        let distinct = self.eat_keyword(Keyword::Distinct);
        let items = self.parse_items()?;
        let mut order_by = Vec::new();
        if self.eat_keyword(Keyword::Order) {
            if !self.eat_keyword(Keyword::By) {
                return Err(self.expected("BY after ORDER"));
            }
            loop {
                let expr = self.parse_expr()?;
                let descending = if self.eat_keyword(Keyword::Desc) {
                    true
                } else {
                    self.eat_keyword(Keyword::Asc);
                    false
                };
                order_by.push(SortItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let mut limit = None;
        if self.eat_keyword(Keyword::Limit) {
            let negative = self.eat(&TokenKind::Minus);
            match self.peek() {
                Some(Token { kind: TokenKind::Int(v), span }) => {
                    if negative {
                        return Err(Diagnostic::new(
                            ErrorClass::SyntaxError,
                            *span,
                            format!("LIMIT must be a non-negative integer, found -{v}"),
                        ));
                    }
                    limit = Some(*v);
                    self.pos += 1;
                }
                _ => return Err(self.expected("a non-negative integer after LIMIT")),
            }
        }
        Ok(ReturnClause { distinct, items, order_by, limit })
    }

    fn parse_items(&mut self) -> Result<Vec<Item>, Diagnostic> {
        let mut items = vec![self.parse_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.parse_item()?);
        }
        Ok(items)
    }

    fn parse_item(&mut self) -> Result<Item, Diagnostic> {
        let expr = self.parse_expr()?;
        let alias = if self.eat_keyword(Keyword::As) {
            Some(self.expect_ident("an alias after AS")?)
        } else {
            None
        };
        Ok(Item { expr, alias })
    }

    // ── patterns ──────────────────────────────────────────────────────

    fn parse_pattern(&mut self) -> Result<PathPattern, Diagnostic> {
        let start = self.parse_node()?;
        let mut segments = Vec::new();
        while matches!(self.peek_kind(), Some(TokenKind::Minus) | Some(TokenKind::Lt)) {
            let rel = self.parse_rel()?;
            if !matches!(self.peek_kind(), Some(TokenKind::LParen)) {
                return Err(Diagnostic::new(
                    ErrorClass::MalformedPath,
                    rel.span,
                    "dangling relationship arrow: expected a node pattern after it",
                ));
            }
            let node = self.parse_node()?;
            segments.push((rel, node));
        }
        Ok(PathPattern { start, segments })
    }

    fn parse_node(&mut self) -> Result<NodePattern, Diagnostic> {
        self.expect(&TokenKind::LParen, "`(` to start a node pattern")?;
        let mut node = NodePattern::default();
        if let Some(TokenKind::Ident(_)) = self.peek_kind() {
            node.variable = Some(self.expect_ident("a variable")?);
        }
        if self.eat(&TokenKind::Colon) {
            node.label = Some(self.expect_ident("a label name after `:`")?);
        }
        if matches!(self.peek_kind(), Some(TokenKind::LBrace)) {
            node.properties = self.parse_prop_map()?;
        }
        self.expect(&TokenKind::RParen, "`)` to close the node pattern")?;
        Ok(node)
    }

    fn parse_rel(&mut self) -> Result<RelPattern, Diagnostic> {
        let start_span = self.here();
        let leading_lt = self.eat(&TokenKind::Lt);
        self.expect(&TokenKind::Minus, "`-` in a relationship pattern")?;

        let mut variable = None;
        let mut rel_type = None;
        let mut hops = None;
        let mut properties = Vec::new();

        if self.eat(&TokenKind::LBracket) {
            if let Some(TokenKind::Ident(_)) = self.peek_kind() {
                variable = Some(self.expect_ident("a relationship variable")?);
            }
            if self.eat(&TokenKind::Colon) {
                rel_type = Some(self.expect_ident("a relationship type after `:`")?);
            }
            if self.eat(&TokenKind::Star) {
                hops = Some(self.parse_hop_range()?);
            }
            if matches!(self.peek_kind(), Some(TokenKind::LBrace)) {
                properties = self.parse_prop_map()?;
            }
            self.expect(&TokenKind::RBracket, "`]` to close the relationship pattern")?;
            self.expect(&TokenKind::Minus, "`-` after the relationship brackets")?;
        } else if !self.eat(&TokenKind::Minus) {
            return Err(self.expected("`[` or `-` in a relationship pattern"));
        }

        let trailing_gt = self.eat(&TokenKind::Gt);
        let end = self.tokens[self.pos - 1].span;
        let span = start_span.merge(end);

        let direction = match (leading_lt, trailing_gt) {
            (true, true) => {
                return Err(Diagnostic::new(
                    ErrorClass::MalformedPath,
                    span,
                    "relationship arrow has heads on both ends",
                ));
            }
            (true, false) => RelDirection::Left,
            (false, true) => RelDirection::Right,
            (false, false) => RelDirection::Undirected,
        };

        if let Some(HopRange { min: Some(min), max: Some(max) }) = hops {
            if min > max {
                return Err(Diagnostic::new(
                    ErrorClass::MalformedPath,
                    span,
                    format!("hop range minimum {min} exceeds maximum {max}"),
                ));
            }
        }

        Ok(RelPattern { variable, rel_type, direction, hops, properties, span })
    }

    fn parse_hop_range(&mut self) -> Result<HopRange, Diagnostic> {
        let take_int = |p: &mut Self| -> Result<Option<u32>, Diagnostic> {
            match p.peek() {
                Some(Token { kind: TokenKind::Int(v), span }) => {
                    let v = u32::try_from(*v).map_err(|_| {
                        Diagnostic::new(
                            ErrorClass::MalformedPath,
                            *span,
                            format!("hop count {v} is out of range"),
                        )
                    })?;
                    p.pos += 1;
                    Ok(Some(v))
                }
                _ => Ok(None),
            }
        };
        let first = take_int(self)?;
        if self.eat(&TokenKind::DotDot) {
            let second = take_int(self)?;
            Ok(HopRange { min: first, max: second })
        } else {
            // `*n` means exactly n; a bare `*` is unbounded.
            Ok(HopRange { min: first, max: first })
        }
    }

    fn parse_prop_map(&mut self) -> Result<Vec<(Sp<String>, Literal)>, Diagnostic> {
        self.expect(&TokenKind::LBrace, "`{` to start a property map")?;
        let mut props = Vec::new();
        if !matches!(self.peek_kind(), Some(TokenKind::RBrace)) {
            loop {
                let key = self.expect_ident("a property name")?;
                self.expect(&TokenKind::Colon, "`:` after the property name")?;
                let value = self.parse_literal()?;
                props.push((key, value.node));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RBrace, "`}` to close the property map")?;
        Ok(props)
    }

    fn parse_literal(&mut self) -> Result<Sp<Literal>, Diagnostic> {
        let negative = self.eat(&TokenKind::Minus);
        let token = self.peek().ok_or_else(|| self.expected("a literal value"))?;
        let lit = match &token.kind {
            TokenKind::Str(s) if !negative => Literal::Str(s.clone()),
            TokenKind::Int(v) => Literal::Int(if negative { -v } else { *v }),
            TokenKind::Float(v) => Literal::Float(if negative { -v } else { *v }),
            TokenKind::Keyword(Keyword::True) if !negative => Literal::Bool(true),
            TokenKind::Keyword(Keyword::False) if !negative => Literal::Bool(false),
            TokenKind::Keyword(Keyword::Null) if !negative => Literal::Null,
            _ => return Err(self.expected("a literal value")),
        };
        let span = token.span;
        self.pos += 1;
        Ok(Sp::new(lit, span))
    }

    // ── expressions ───────────────────────────────────────────────────

    fn parse_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.parse_and_expr()?;
        while self.eat_keyword(Keyword::Or) {
            let rhs = self.parse_and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.parse_not_expr()?;
        while self.eat_keyword(Keyword::And) {
            let rhs = self.parse_not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_not_expr(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat_keyword(Keyword::Not) {
            let inner = self.parse_not_expr()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, Diagnostic> {
        let lhs = self.parse_primary()?;
        let op = match self.peek_kind() {
            Some(TokenKind::Eq) => CompareOp::Eq,
            Some(TokenKind::Ne) => CompareOp::Ne,
            Some(TokenKind::Lt) => CompareOp::Lt,
            Some(TokenKind::Le) => CompareOp::Le,
            Some(TokenKind::Gt) => CompareOp::Gt,
            Some(TokenKind::Ge) => CompareOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.parse_primary()?;
        Ok(Expr::Comparison { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn parse_primary(&mut self) -> Result<Expr, Diagnostic> {
        match self.peek_kind() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.expect(&TokenKind::RParen, "`)` to close the expression")?;
                Ok(inner)
            }
            Some(TokenKind::Ident(_)) => {
                let name = self.expect_ident("an identifier")?;
                match self.peek_kind() {
                    Some(TokenKind::Dot) => {
                        self.pos += 1;
                        let key = self.expect_ident("a property name after `.`")?;
                        Ok(Expr::Property { variable: name, key })
                    }
                    Some(TokenKind::LParen) => self.parse_call(name),
                    _ => Ok(Expr::Variable(name)),
                }
            }
            Some(
                TokenKind::Str(_)
                | TokenKind::Int(_)
                | TokenKind::Float(_)
                | TokenKind::Keyword(Keyword::True)
                | TokenKind::Keyword(Keyword::False)
                | TokenKind::Keyword(Keyword::Null),
            )
            | Some(TokenKind::Minus) => Ok(Expr::Literal(self.parse_literal()?)),
            _ => Err(self.expected("an expression")),
        }
    }

    fn parse_call(&mut self, name: Sp<String>) -> Result<Expr, Diagnostic> {
        let func = AggregateFunc::from_name(&name.node).ok_or_else(|| {
            Diagnostic::new(
                ErrorClass::SyntaxError,
                name.span,
                format!(
                    "unknown function `{}`; supported: count, sum, avg, min, max, collect",
                    name.node
                ),
            )
        })?;
        let func = Sp::new(func, name.span);
        self.expect(&TokenKind::LParen, "`(` after the function name")?;
        let distinct = self.eat_keyword(Keyword::Distinct);
        let arg = if matches!(self.peek_kind(), Some(TokenKind::Star)) {
            let star = self.advance().expect("peeked").span;
            if func.node != AggregateFunc::Count {
                return Err(Diagnostic::new(
                    ErrorClass::SyntaxError,
                    star,
                    format!("`*` is only valid inside count(), not {}()", func.node.as_str()),
                ));
            }
            AggArg::Star
        } else {
            AggArg::Expr(Box::new(self.parse_expr()?))
        };
        self.expect(&TokenKind::RParen, "`)` to close the function call")?;
        Ok(Expr::Aggregate { func, distinct, arg })
    }
}

// ── post-parse analysis ───────────────────────────────────────────────

/// Scope and placement checks: every referenced variable must be bound by a
/// prior pattern or WITH item, WITH expressions need aliases, aggregates may
/// not appear in WHERE or inside another aggregate.
fn analyze(ast: &QueryAst) -> Result<(), Diagnostic> {
    let mut scope: HashSet<String> = HashSet::new();

    for clause in &ast.clauses {
        match clause {
            Clause::Match(m) => {
                for pattern in &m.patterns {
                    bind_pattern(pattern, &mut scope);
                }
                if let Some(where_expr) = &m.where_expr {
                    check_expr(where_expr, &scope, ExprPosition::Where)?;
                }
            }
            Clause::With(w) => {
                let mut next_scope = HashSet::new();
                for item in &w.items {
                    check_expr(&item.expr, &scope, ExprPosition::Projection)?;
                    match (&item.alias, &item.expr) {
                        (Some(alias), _) => {
                            next_scope.insert(alias.node.clone());
                        }
                        (None, Expr::Variable(var)) => {
                            next_scope.insert(var.node.clone());
                        }
                        (None, other) => {
                            return Err(Diagnostic::new(
                                ErrorClass::SyntaxError,
                                other.span(),
                                "expression in WITH must have an alias",
                            ));
                        }
                    }
                }
                scope = next_scope;
                if let Some(where_expr) = &w.where_expr {
                    check_expr(where_expr, &scope, ExprPosition::Where)?;
                }
            }
            Clause::Return(r) => {
                let mut order_scope = scope.clone();
                for item in &r.items {
                    check_expr(&item.expr, &scope, ExprPosition::Projection)?;
                    if let Some(alias) = &item.alias {
                        order_scope.insert(alias.node.clone());
                    }
                }
                for sort in &r.order_by {
                    check_expr(&sort.expr, &order_scope, ExprPosition::Projection)?;
                }
            }
        }
    }
    Ok(())
}

fn bind_pattern(pattern: &PathPattern, scope: &mut HashSet<String>) {
    fn bind_node(node: &NodePattern, scope: &mut HashSet<String>) {
        if let Some(var) = &node.variable {
            scope.insert(var.node.clone());
        }
    }
    bind_node(&pattern.start, scope);
    for (rel, node) in &pattern.segments {
        if let Some(var) = &rel.variable {
            scope.insert(var.node.clone());
        }
        bind_node(node, scope);
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ExprPosition {
    Where,
    Projection,
}

fn check_expr(expr: &Expr, scope: &HashSet<String>, position: ExprPosition) -> Result<(), Diagnostic> {
    let mut problem: Option<Diagnostic> = None;
    let mut agg_depth = 0usize;
    walk_with_agg_depth(expr, &mut agg_depth, &mut |e, depth| {
        if problem.is_some() {
            return;
        }
        match e {
            Expr::Variable(var) => {
                if !scope.contains(&var.node) {
                    problem = Some(undefined_variable(var));
                }
            }
            Expr::Property { variable, .. } => {
                if !scope.contains(&variable.node) {
                    problem = Some(undefined_variable(variable));
                }
            }
            Expr::Aggregate { func, .. } => {
                if position == ExprPosition::Where {
                    problem = Some(Diagnostic::new(
                        ErrorClass::SyntaxError,
                        func.span,
                        format!("aggregation {}() is not allowed in WHERE", func.node.as_str()),
                    ));
                } else if depth > 1 {
                    problem = Some(Diagnostic::new(
                        ErrorClass::SyntaxError,
                        func.span,
                        "aggregation calls cannot be nested",
                    ));
                }
            }
            _ => {}
        }
    });
    match problem {
        Some(diag) => Err(diag),
        None => Ok(()),
    }
}

fn walk_with_agg_depth<'a>(
    expr: &'a Expr,
    depth: &mut usize,
    visit: &mut impl FnMut(&'a Expr, usize),
) {
    if let Expr::Aggregate { .. } = expr {
        *depth += 1;
    }
    visit(expr, *depth);
    match expr {
        Expr::Comparison { lhs, rhs, .. } | Expr::And(lhs, rhs) | Expr::Or(lhs, rhs) => {
            walk_with_agg_depth(lhs, depth, visit);
            walk_with_agg_depth(rhs, depth, visit);
        }
        Expr::Not(inner) => walk_with_agg_depth(inner, depth, visit),
        Expr::Aggregate { arg: AggArg::Expr(inner), .. } => {
            walk_with_agg_depth(inner, depth, visit);
        }
        _ => {}
    }
    if let Expr::Aggregate { .. } = expr {
        *depth -= 1;
    }
}

fn undefined_variable(var: &Sp<String>) -> Diagnostic {
    Diagnostic::new(
        ErrorClass::SyntaxError,
        var.span,
        format!("variable `{}` is not defined", var.node),
    )
}
