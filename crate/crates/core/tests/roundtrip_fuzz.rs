//! Canonical-text round-trip over randomly built queries: for every query the
//! builder produces, parse -> canonical_text -> parse reproduces the AST, and
//! the canonical form is a fixpoint of itself.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use recypher::cypher::{canonical_text, parse_source};

const LABELS: [&str; 4] = ["Person", "Account", "Crime", "City"];
const TYPES: [&str; 3] = ["KNOWS", "OWNS", "PARTY_TO"];
const PROPS: [&str; 4] = ["name", "age", "balance", "kind"];

struct QueryBuilder {
    rng: ChaCha8Rng,
    bound: Vec<String>,
    next_var: usize,
}

impl QueryBuilder {
    fn new(seed: u64) -> Self {
        QueryBuilder { rng: ChaCha8Rng::seed_from_u64(seed), bound: Vec::new(), next_var: 0 }
    }

    fn fresh_var(&mut self) -> String {
        let name = format!("v{}", self.next_var);
        self.next_var += 1;
        self.bound.push(name.clone());
        name
    }

    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options[self.rng.gen_range(0..options.len())]
    }

    fn literal(&mut self) -> String {
        match self.rng.gen_range(0..5) {
            0 => format!("{}", self.rng.gen_range(-50..50)),
            1 => format!("{:.1}", self.rng.gen_range(-5.0..5.0)),
            2 => format!("\"s{}\"", self.rng.gen_range(0..9)),
            3 => "true".to_string(),
            _ => "null".to_string(),
        }
    }

    fn prop_map(&mut self) -> String {
        let n = self.rng.gen_range(1..=2);
        let entries: Vec<String> = (0..n)
            .map(|_| {
                let key = self.pick(&PROPS).to_string();
                let value = self.literal();
                format!("{key}: {value}")
            })
            .collect();
        format!("{{{}}}", entries.join(", "))
    }

    fn node(&mut self) -> String {
        let var = if self.rng.gen_bool(0.8) { Some(self.fresh_var()) } else { None };
        let label = if self.rng.gen_bool(0.7) { Some(self.pick(&LABELS)) } else { None };
        let props = if self.rng.gen_bool(0.25) { Some(self.prop_map()) } else { None };
        let mut out = String::from("(");
        if let Some(var) = &var {
            out.push_str(var);
        }
        if let Some(label) = label {
            out.push(':');
            out.push_str(label);
        }
        if let Some(props) = props {
            if var.is_some() || label.is_some() {
                out.push(' ');
            }
            out.push_str(&props);
        }
        out.push(')');
        out
    }

    fn rel(&mut self) -> String {
        let bare = self.rng.gen_bool(0.2);
        let arrow = self.rng.gen_range(0..3);
        if bare {
            return match arrow {
                0 => "-->".to_string(),
                1 => "<--".to_string(),
                _ => "--".to_string(),
            };
        }
        let mut inner = String::new();
        if self.rng.gen_bool(0.5) {
            inner.push_str(&self.fresh_var());
        }
        if self.rng.gen_bool(0.8) {
            inner.push(':');
            inner.push_str(self.pick(&TYPES));
        }
        if self.rng.gen_bool(0.3) {
            let min = self.rng.gen_range(1..=3u32);
            let max = min + self.rng.gen_range(0..=2u32);
            match self.rng.gen_range(0..4) {
                0 => inner.push('*'),
                1 => inner.push_str(&format!("*{min}")),
                2 => inner.push_str(&format!("*{min}..{max}")),
                _ => inner.push_str(&format!("*..{max}")),
            }
        }
        if self.rng.gen_bool(0.2) {
            inner.push(' ');
            inner.push_str(&self.prop_map());
        }
        match arrow {
            0 => format!("-[{inner}]->"),
            1 => format!("<-[{inner}]-"),
            _ => format!("-[{inner}]-"),
        }
    }

    fn pattern(&mut self) -> String {
        let mut out = self.node();
        for _ in 0..self.rng.gen_range(0..=2) {
            out.push_str(&self.rel());
            out.push_str(&self.node());
        }
        out
    }

    fn comparison(&mut self) -> String {
        let var = self.bound[self.rng.gen_range(0..self.bound.len())].clone();
        let prop = self.pick(&PROPS);
        let op = *["=", "<>", "<", "<=", ">", ">="]
            .choose(&mut self.rng)
            .expect("non-empty");
        let value = self.literal();
        format!("{var}.{prop} {op} {value}")
    }

    fn boolean_expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.5) {
            return self.comparison();
        }
        match self.rng.gen_range(0..3) {
            0 => format!("{} AND {}", self.boolean_expr(depth - 1), self.boolean_expr(depth - 1)),
            1 => format!("{} OR {}", self.boolean_expr(depth - 1), self.boolean_expr(depth - 1)),
            _ => format!("NOT {}", self.boolean_expr(depth - 1)),
        }
    }

    fn build(&mut self) -> String {
        let mut out = String::new();
        if self.rng.gen_bool(0.15) {
            out.push_str("OPTIONAL ");
        }
        out.push_str("MATCH ");
        out.push_str(&self.pattern());
        if self.rng.gen_bool(0.3) {
            out.push_str(", ");
            let extra = self.pattern();
            out.push_str(&extra);
        }
        if self.bound.is_empty() {
            // Guarantee at least one bound variable for expressions.
            out.push_str(", ");
            let node = format!("({}:Person)", self.fresh_var());
            out.push_str(&node);
        }
        if self.rng.gen_bool(0.5) {
            out.push_str(" WHERE ");
            let expr = self.boolean_expr(2);
            out.push_str(&expr);
        }

        if self.rng.gen_bool(0.4) {
            // WITH narrows scope to the projected names.
            let keep: Vec<String> = self.bound.clone();
            let mut items: Vec<String> = keep.clone();
            if self.rng.gen_bool(0.5) {
                let target = keep[self.rng.gen_range(0..keep.len())].clone();
                items.push(format!("count(DISTINCT {target}) AS agg0"));
            }
            out.push_str(" WITH ");
            if self.rng.gen_bool(0.3) {
                out.push_str("DISTINCT ");
            }
            out.push_str(&items.join(", "));
            if items.iter().any(|i| i.ends_with("agg0")) && self.rng.gen_bool(0.5) {
                out.push_str(" WHERE agg0 > 1");
                self.bound.push("agg0".to_string());
            } else if items.iter().any(|i| i.ends_with("agg0")) {
                self.bound.push("agg0".to_string());
            }
        }

        out.push_str(" RETURN ");
        if self.rng.gen_bool(0.3) {
            out.push_str("DISTINCT ");
        }
        let n_items = self.rng.gen_range(1..=3);
        let mut aliases = Vec::new();
        let items: Vec<String> = (0..n_items)
            .map(|i| {
                let var = self.bound[self.rng.gen_range(0..self.bound.len())].clone();
                let base = match self.rng.gen_range(0..4) {
                    0 => var,
                    1 => format!("{var}.{}", self.pick(&PROPS)),
                    2 => "count(*)".to_string(),
                    _ => format!("min({var}.{})", self.pick(&PROPS)),
                };
                if self.rng.gen_bool(0.4) {
                    let alias = format!("a{i}");
                    aliases.push(alias.clone());
                    format!("{base} AS {alias}")
                } else {
                    base
                }
            })
            .collect();
        out.push_str(&items.join(", "));
        if !aliases.is_empty() && self.rng.gen_bool(0.5) {
            out.push_str(&format!(" ORDER BY {} DESC", aliases[0]));
        }
        if self.rng.gen_bool(0.4) {
            out.push_str(&format!(" LIMIT {}", self.rng.gen_range(1..100)));
        }
        out
    }
}

#[test]
fn random_queries_roundtrip() {
    for seed in 0..600u64 {
        let source = QueryBuilder::new(seed).build();
        let ast = match parse_source(&source) {
            Ok(ast) => ast,
            Err(diag) => panic!("seed {seed}: builder produced unparseable query `{source}`: {diag}"),
        };
        let text = canonical_text(&ast);
        let reparsed = parse_source(&text)
            .unwrap_or_else(|d| panic!("seed {seed}: canonical `{text}` failed to reparse: {d}"));
        assert_eq!(reparsed, ast, "seed {seed}: `{source}` vs canonical `{text}`");
        // The canonical form is its own fixpoint.
        assert_eq!(canonical_text(&reparsed), text, "seed {seed}");
    }
}
