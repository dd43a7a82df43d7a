//! Property-graph schema: node labels, relationship types with endpoint
//! constraints, and typed property keys. Loaded once from JSON and shared
//! immutably by the validator, the prompt builder and the harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declared value kind of a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Integer,
    Float,
    Boolean,
    Date,
}

impl std::fmt::Display for ValueKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ValueKind::String => "string",
            ValueKind::Integer => "integer",
            ValueKind::Float => "float",
            ValueKind::Boolean => "boolean",
            ValueKind::Date => "date",
        })
    }
}

/// A relationship type: the (source label, target label) pairs it may connect
/// and its own property map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipType {
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub properties: BTreeMap<String, ValueKind>,
}

/// The schema injected into every prompt and enforced by the validator.
///
/// Maps are ordered so that serialized forms (prompts, summaries) are
/// deterministic. Label and relationship-type names are case sensitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSchema {
    pub dataset_id: String,
    pub labels: BTreeMap<String, BTreeMap<String, ValueKind>>,
    pub relationships: BTreeMap<String, RelationshipType>,
}

impl GraphSchema {
    pub fn from_json_str(text: &str) -> Result<Self, SchemaError> {
        let schema: GraphSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SchemaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.display().to_string(),
            source,
        })?;
        GraphSchema::from_json_str(&text)
    }

    /// Check structural consistency: every relationship endpoint must name a
    /// declared label and must list at least one pair.
    pub fn validate(&self) -> Result<(), SchemaError> {
        for (name, rel) in &self.relationships {
            if rel.pairs.is_empty() {
                return Err(SchemaError::NoEndpointPairs { relationship: name.clone() });
            }
            for (src, dst) in &rel.pairs {
                for label in [src, dst] {
                    if !self.labels.contains_key(label) {
                        return Err(SchemaError::UnknownEndpoint {
                            relationship: name.clone(),
                            label: label.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label_properties(&self, label: &str) -> Option<&BTreeMap<String, ValueKind>> {
        self.labels.get(label)
    }

    pub fn relationship(&self, name: &str) -> Option<&RelationshipType> {
        self.relationships.get(name)
    }

    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn relationship_names(&self) -> impl Iterator<Item = &str> {
        self.relationships.keys().map(String::as_str)
    }

    /// Deterministic human-readable rendering, used verbatim in prompts.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Dataset: {}", self.dataset_id);
        let _ = writeln!(out, "Node labels:");
        for (label, props) in &self.labels {
            let _ = writeln!(out, "  {} {}", label, render_properties(props));
        }
        let _ = writeln!(out, "Relationship types:");
        for (name, rel) in &self.relationships {
            let pairs = rel
                .pairs
                .iter()
                .map(|(src, dst)| format!("({src})-[:{name}]->({dst})"))
                .collect::<Vec<_>>()
                .join(", ");
            if rel.properties.is_empty() {
                let _ = writeln!(out, "  {pairs}");
            } else {
                let _ = writeln!(out, "  {pairs} {}", render_properties(&rel.properties));
            }
        }
        out
    }
}

fn render_properties(props: &BTreeMap<String, ValueKind>) -> String {
    let inner = props
        .iter()
        .map(|(name, kind)| format!("{name}: {kind}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{inner}}}")
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("cannot read schema file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("relationship `{relationship}` references undeclared label `{label}`")]
    UnknownEndpoint { relationship: String, label: String },
    #[error("relationship `{relationship}` declares no endpoint pairs")]
    NoEndpointPairs { relationship: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"{
        "dataset_id": "mini",
        "labels": {
            "Person": {"name": "string", "age": "integer"},
            "City": {"name": "string"}
        },
        "relationships": {
            "LIVES_IN": {"pairs": [["Person", "City"]], "properties": {"since": "date"}}
        }
    }"#;

    #[test]
    fn loads_and_answers_lookups() {
        let schema = GraphSchema::from_json_str(MINI).unwrap();
        assert_eq!(schema.dataset_id, "mini");
        assert_eq!(schema.label_properties("Person").unwrap().len(), 2);
        assert!(schema.label_properties("person").is_none(), "labels are case sensitive");
        let rel = schema.relationship("LIVES_IN").unwrap();
        assert_eq!(rel.pairs, vec![("Person".to_string(), "City".to_string())]);
    }

    #[test]
    fn rejects_undeclared_endpoint() {
        let bad = MINI.replace("\"Person\", \"City\"", "\"Person\", \"Country\"");
        let err = GraphSchema::from_json_str(&bad).unwrap_err();
        assert!(matches!(err, SchemaError::UnknownEndpoint { .. }), "{err}");
    }

    #[test]
    fn rejects_empty_pairs() {
        let bad = r#"{
            "dataset_id": "mini",
            "labels": {"Person": {}},
            "relationships": {"KNOWS": {"pairs": [], "properties": {}}}
        }"#;
        assert!(matches!(
            GraphSchema::from_json_str(bad).unwrap_err(),
            SchemaError::NoEndpointPairs { .. }
        ));
    }

    #[test]
    fn summary_is_deterministic_and_sorted() {
        let schema = GraphSchema::from_json_str(MINI).unwrap();
        let a = schema.summary();
        let b = schema.summary();
        assert_eq!(a, b);
        assert!(a.contains("City {name: string}"));
        assert!(a.contains("(Person)-[:LIVES_IN]->(City) {since: date}"));
        let city = a.find("City").unwrap();
        let person = a.find("Person").unwrap();
        assert!(city < person, "labels render in sorted order");
    }
}
