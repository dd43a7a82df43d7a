//! Schema validation of a parsed query: label existence, relationship type
//! existence, endpoint/direction consistency, and property-key checks for
//! property maps and property accesses.
//!
//! Diagnostics come back in source order; the first one is decisive for the
//! execution status message, the rest enrich its detail text.

use std::collections::HashMap;

use super::ast::*;
use super::diag::{Diagnostic, ErrorClass};
use crate::schema::GraphSchema;

/// What a variable is bound to, as far as the schema checks care.
#[derive(Debug, Clone, PartialEq)]
enum Binding {
    /// Node variable; label recorded when the pattern declares one.
    Node(Option<String>),
    /// Relationship variable; type recorded when the pattern declares one.
    Rel(Option<String>),
    /// Projected value (alias of an expression); opaque to property checks.
    Value,
}

/// Check `ast` against `schema` and return every diagnostic found, ordered by
/// source position. An empty list means the query is consistent with the
/// schema. Scope errors are the parser's job; unknown variables met here are
/// treated as opaque rather than re-reported.
pub fn validate(ast: &QueryAst, schema: &GraphSchema) -> Vec<Diagnostic> {
    let mut v = Validator { schema, diags: Vec::new(), bindings: HashMap::new() };
    for clause in &ast.clauses {
        match clause {
            Clause::Match(m) => {
                for pattern in &m.patterns {
                    v.check_pattern(pattern);
                }
                if let Some(where_expr) = &m.where_expr {
                    v.check_expr(where_expr);
                }
            }
            Clause::With(w) => {
                for item in &w.items {
                    v.check_expr(&item.expr);
                }
                v.rebind_for_with(&w.items);
                if let Some(where_expr) = &w.where_expr {
                    v.check_expr(where_expr);
                }
            }
            Clause::Return(r) => {
                for item in &r.items {
                    v.check_expr(&item.expr);
                }
                for sort in &r.order_by {
                    v.check_expr(&sort.expr);
                }
            }
        }
    }
    v.diags.sort_by_key(|d| (d.span.start, d.span.end));
    v.diags
}

struct Validator<'a> {
    schema: &'a GraphSchema,
    diags: Vec<Diagnostic>,
    bindings: HashMap<String, Binding>,
}

impl<'a> Validator<'a> {
    fn check_pattern(&mut self, pattern: &PathPattern) {
        self.check_node(&pattern.start);
        let mut prev = &pattern.start;
        for (rel, node) in &pattern.segments {
            self.check_node(node);
            self.check_rel(rel, prev, node);
            prev = node;
        }
    }

    fn check_node(&mut self, node: &NodePattern) {
        let mut label_known = None;
        if let Some(label) = &node.label {
            if self.schema.label_properties(&label.node).is_some() {
                label_known = Some(label.node.clone());
            } else {
                self.diags.push(Diagnostic::new(
                    ErrorClass::UnknownLabel,
                    label.span,
                    format!(
                        "unknown node label `{}`; schema `{}` defines: {}",
                        label.node,
                        self.schema.dataset_id,
                        join_names(self.schema.label_names()),
                    ),
                ));
            }
        }
        if let Some(var) = &node.variable {
            match self.bindings.get(&var.node) {
                // Keep an existing label binding unless this occurrence adds one.
                Some(Binding::Node(Some(_))) if label_known.is_none() => {}
                _ => {
                    self.bindings.insert(var.node.clone(), Binding::Node(label_known.clone()));
                }
            }
        }
        if let Some(label) = label_known {
            let props = self.schema.label_properties(&label).expect("label checked above");
            for (key, _) in &node.properties {
                if !props.contains_key(&key.node) {
                    self.diags.push(unknown_property(key, &label, "label", props.keys()));
                }
            }
        }
    }

    fn check_rel(&mut self, rel: &RelPattern, source: &NodePattern, target: &NodePattern) {
        let mut type_known = None;
        if let Some(rel_type) = &rel.rel_type {
            if self.schema.relationship(&rel_type.node).is_some() {
                type_known = Some(rel_type.node.clone());
            } else {
                self.diags.push(Diagnostic::new(
                    ErrorClass::UnknownRelationshipType,
                    rel_type.span,
                    format!(
                        "unknown relationship type `{}`; schema `{}` defines: {}",
                        rel_type.node,
                        self.schema.dataset_id,
                        join_names(self.schema.relationship_names()),
                    ),
                ));
            }
        }
        if let Some(var) = &rel.variable {
            self.bindings.insert(var.node.clone(), Binding::Rel(type_known.clone()));
        }
        let Some(type_name) = type_known else { return };
        let def = self.schema.relationship(&type_name).expect("type checked above");

        for (key, _) in &rel.properties {
            if !def.properties.contains_key(&key.node) {
                self.diags.push(unknown_property(key, &type_name, "relationship type", def.properties.keys()));
            }
        }

        // Endpoint and direction checks need both endpoint labels; skip when
        // either side is unresolvable (or itself unknown, to avoid cascades).
        let Some(src_label) = self.resolve_label(source) else { return };
        let Some(dst_label) = self.resolve_label(target) else { return };
        let span = rel.rel_type.as_ref().map(|t| t.span).unwrap_or(rel.span);

        let allows = |a: &str, b: &str| def.pairs.iter().any(|(s, d)| s == a && d == b);
        let ok = match rel.direction {
            RelDirection::Right => allows(&src_label, &dst_label),
            RelDirection::Left => allows(&dst_label, &src_label),
            RelDirection::Undirected => {
                allows(&src_label, &dst_label) || allows(&dst_label, &src_label)
            }
        };
        if ok {
            return;
        }

        let (written_src, written_dst) = match rel.direction {
            RelDirection::Left => (dst_label.clone(), src_label.clone()),
            _ => (src_label.clone(), dst_label.clone()),
        };
        let allowed = def
            .pairs
            .iter()
            .map(|(s, d)| format!("({s})->({d})"))
            .collect::<Vec<_>>()
            .join(", ");
        let detail = if allows(&written_dst, &written_src) {
            format!(
                "relationship `{type_name}` points from {written_dst} to {written_src}, not from {written_src} to {written_dst}; reverse the arrow"
            )
        } else {
            format!(
                "relationship `{type_name}` does not connect ({written_src})->({written_dst}); allowed: {allowed}"
            )
        };
        self.diags.push(Diagnostic::new(ErrorClass::DirectionViolation, span, detail));
    }

    /// Label of a node pattern: inline if written, otherwise whatever the
    /// variable was bound to earlier.
    fn resolve_label(&self, node: &NodePattern) -> Option<String> {
        if let Some(label) = &node.label {
            return self
                .schema
                .label_properties(&label.node)
                .is_some()
                .then(|| label.node.clone());
        }
        let var = node.variable.as_ref()?;
        match self.bindings.get(&var.node) {
            Some(Binding::Node(label)) => label.clone(),
            _ => None,
        }
    }

    fn check_expr(&mut self, expr: &Expr) {
        let mut accesses: Vec<(&Sp<String>, &Sp<String>)> = Vec::new();
        expr.walk(&mut |e| {
            if let Expr::Property { variable, key } = e {
                accesses.push((variable, key));
            }
        });
        for (variable, key) in accesses {
            match self.bindings.get(&variable.node) {
                Some(Binding::Node(Some(label))) => {
                    let props = self.schema.label_properties(label).expect("bound labels exist");
                    if !props.contains_key(&key.node) {
                        self.diags.push(unknown_property(key, label, "label", props.keys()));
                    }
                }
                Some(Binding::Rel(Some(type_name))) => {
                    let def = self.schema.relationship(type_name).expect("bound types exist");
                    if !def.properties.contains_key(&key.node) {
                        self.diags.push(unknown_property(
                            key,
                            type_name,
                            "relationship type",
                            def.properties.keys(),
                        ));
                    }
                }
                // Unlabeled entities, projected values and parser-level
                // unknowns are opaque here.
                _ => {}
            }
        }
    }

    /// WITH rebinds the scope: plain variables carry their entity binding
    /// through (also under an alias); any other expression projects a value.
    fn rebind_for_with(&mut self, items: &[Item]) {
        let mut next: HashMap<String, Binding> = HashMap::new();
        for item in items {
            let name = match (&item.alias, &item.expr) {
                (Some(alias), _) => alias.node.clone(),
                (None, Expr::Variable(var)) => var.node.clone(),
                // Parser rejects unaliased non-variable items in WITH.
                (None, _) => continue,
            };
            let binding = match &item.expr {
                Expr::Variable(var) => {
                    self.bindings.get(&var.node).cloned().unwrap_or(Binding::Value)
                }
                _ => Binding::Value,
            };
            next.insert(name, binding);
        }
        self.bindings = next;
    }
}

fn unknown_property<'k>(
    key: &Sp<String>,
    owner: &str,
    owner_kind: &str,
    known: impl Iterator<Item = &'k String>,
) -> Diagnostic {
    Diagnostic::new(
        ErrorClass::UnknownProperty,
        key.span,
        format!(
            "unknown property `{}` on {owner_kind} `{owner}`; defined: {}",
            key.node,
            join_names(known.map(String::as_str)),
        ),
    )
}

fn join_names<'n>(names: impl Iterator<Item = &'n str>) -> String {
    let joined = names.collect::<Vec<_>>().join(", ");
    if joined.is_empty() {
        "(none)".to_string()
    } else {
        joined
    }
}

/// Diagnostic span sanity used by tests: every span must sit inside the source.
pub fn spans_within(diags: &[Diagnostic], source_len: usize) -> bool {
    diags.iter().all(|d| d.span.start <= d.span.end && d.span.end <= source_len)
}
