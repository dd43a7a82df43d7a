//! Canonical text form of an AST: uppercase keywords, single spaces, fully
//! parenthesized boolean expressions. Reparsing the output reproduces the
//! AST structurally.

use std::fmt::Write;

use super::ast::*;

/// Deterministic text rendering of a parsed query.
pub fn canonical_text(ast: &QueryAst) -> String {
    let mut out = String::new();
    for (i, clause) in ast.clauses.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match clause {
            Clause::Match(m) => write_match(&mut out, m),
            Clause::With(w) => write_with(&mut out, w),
            Clause::Return(r) => write_return(&mut out, r),
        }
    }
    out
}

fn write_match(out: &mut String, m: &MatchClause) {
    if m.optional {
        out.push_str("OPTIONAL ");
    }
    out.push_str("MATCH ");
    for (i, pattern) in m.patterns.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_pattern(out, pattern);
    }
    if let Some(expr) = &m.where_expr {
        out.push_str(" WHERE ");
        write_expr(out, expr);
    }
}

fn write_with(out: &mut String, w: &WithClause) {
    out.push_str("WITH ");
    if w.distinct {
        out.push_str("DISTINCT ");
    }
    write_items(out, &w.items);
    if let Some(expr) = &w.where_expr {
        out.push_str(" WHERE ");
        write_expr(out, expr);
    }
}

fn write_return(out: &mut String, r: &ReturnClause) {
    out.push_str("RETURN ");
    if r.distinct {
        out.push_str("DISTINCT ");
    }
    write_items(out, &r.items);
    if !r.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, sort) in r.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, &sort.expr);
            if sort.descending {
                out.push_str(" DESC");
            }
        }
    }
    if let Some(limit) = r.limit {
        let _ = write!(out, " LIMIT {limit}");
    }
}

fn write_items(out: &mut String, items: &[Item]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, &item.expr);
        if let Some(alias) = &item.alias {
            let _ = write!(out, " AS {}", alias.node);
        }
    }
}

fn write_pattern(out: &mut String, pattern: &PathPattern) {
    write_node(out, &pattern.start);
    for (rel, node) in &pattern.segments {
        write_rel(out, rel);
        write_node(out, node);
    }
}

fn write_node(out: &mut String, node: &NodePattern) {
    out.push('(');
    if let Some(var) = &node.variable {
        out.push_str(&var.node);
    }
    if let Some(label) = &node.label {
        let _ = write!(out, ":{}", label.node);
    }
    if !node.properties.is_empty() {
        if node.variable.is_some() || node.label.is_some() {
            out.push(' ');
        }
        write_prop_map(out, &node.properties);
    }
    out.push(')');
}

fn write_rel(out: &mut String, rel: &RelPattern) {
    if rel.direction == RelDirection::Left {
        out.push('<');
    }
    out.push('-');
    let bare = rel.variable.is_none()
        && rel.rel_type.is_none()
        && rel.hops.is_none()
        && rel.properties.is_empty();
    if !bare {
        out.push('[');
        if let Some(var) = &rel.variable {
            out.push_str(&var.node);
        }
        if let Some(rel_type) = &rel.rel_type {
            let _ = write!(out, ":{}", rel_type.node);
        }
        if let Some(hops) = &rel.hops {
            write_hops(out, hops);
        }
        if !rel.properties.is_empty() {
            out.push(' ');
            write_prop_map(out, &rel.properties);
        }
        out.push(']');
    }
    out.push('-');
    if rel.direction == RelDirection::Right {
        out.push('>');
    }
}

fn write_hops(out: &mut String, hops: &HopRange) {
    out.push('*');
    match (hops.min, hops.max) {
        (None, None) => {}
        (Some(min), Some(max)) if min == max => {
            let _ = write!(out, "{min}");
        }
        (min, max) => {
            if let Some(min) = min {
                let _ = write!(out, "{min}");
            }
            out.push_str("..");
            if let Some(max) = max {
                let _ = write!(out, "{max}");
            }
        }
    }
}

fn write_prop_map(out: &mut String, props: &[(Sp<String>, Literal)]) {
    out.push('{');
    for (i, (key, value)) in props.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}: ", key.node);
        write_literal(out, value);
    }
    out.push('}');
}

fn write_literal(out: &mut String, literal: &Literal) {
    match literal {
        Literal::Str(s) => {
            out.push('"');
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    other => out.push(other),
                }
            }
            out.push('"');
        }
        Literal::Int(v) => {
            let _ = write!(out, "{v}");
        }
        // Keep a fractional part so the text relexes as a float.
        Literal::Float(v) if v.fract() == 0.0 && v.is_finite() => {
            let _ = write!(out, "{v:.1}");
        }
        Literal::Float(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Bool(true) => out.push_str("true"),
        Literal::Bool(false) => out.push_str("false"),
        Literal::Null => out.push_str("null"),
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Literal(lit) => write_literal(out, &lit.node),
        Expr::Variable(var) => out.push_str(&var.node),
        Expr::Property { variable, key } => {
            let _ = write!(out, "{}.{}", variable.node, key.node);
        }
        Expr::Comparison { op, lhs, rhs } => {
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.as_str());
            write_expr(out, rhs);
        }
        Expr::And(lhs, rhs) => write_binary(out, "AND", lhs, rhs),
        Expr::Or(lhs, rhs) => write_binary(out, "OR", lhs, rhs),
        Expr::Not(inner) => {
            out.push_str("NOT (");
            write_expr(out, inner);
            out.push(')');
        }
        Expr::Aggregate { func, distinct, arg } => {
            out.push_str(func.node.as_str());
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            match arg {
                AggArg::Star => out.push('*'),
                AggArg::Expr(inner) => write_expr(out, inner),
            }
            out.push(')');
        }
    }
}

/// Boolean operands are always parenthesized, so precedence is explicit in
/// the canonical form.
fn write_binary(out: &mut String, op: &str, lhs: &Expr, rhs: &Expr) {
    out.push('(');
    write_expr(out, lhs);
    let _ = write!(out, ") {op} (");
    write_expr(out, rhs);
    out.push(')');
}
