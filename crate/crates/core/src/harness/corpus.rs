//! The evaluation question corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Complexity;
use crate::schema::GraphSchema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub dataset_id: String,
    pub complexity: Complexity,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCorpus {
    pub entries: Vec<Question>,
}

impl QuestionCorpus {
    pub fn from_json_str(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        QuestionCorpus::from_json_str(&text)
    }

    /// Referential checks needed before any run: ids unique and every
    /// referenced dataset present. Returns every violation, not just the
    /// first.
    pub fn check_references(&self, schemas: &BTreeMap<String, Arc<GraphSchema>>) -> Vec<CorpusError> {
        let mut problems = Vec::new();
        let mut seen_ids = BTreeSet::new();
        for entry in &self.entries {
            if !seen_ids.insert(entry.id.as_str()) {
                problems.push(CorpusError::DuplicateId { id: entry.id.clone() });
            }
            if !schemas.contains_key(&entry.dataset_id) {
                problems.push(CorpusError::UnknownDataset {
                    id: entry.id.clone(),
                    dataset_id: entry.dataset_id.clone(),
                });
            }
        }
        problems
    }

    /// Coverage check for full evaluation corpora: all three complexity
    /// tiers present for each dataset that appears. Partial corpora (smoke
    /// configs) are allowed at run time, so this is separate from
    /// [`QuestionCorpus::check_references`].
    pub fn check_tiers(&self) -> Vec<CorpusError> {
        let mut tiers: BTreeMap<&str, BTreeSet<Complexity>> = BTreeMap::new();
        for entry in &self.entries {
            tiers.entry(&entry.dataset_id).or_default().insert(entry.complexity);
        }
        let mut problems = Vec::new();
        for (dataset, present) in &tiers {
            for tier in [Complexity::Easy, Complexity::Medium, Complexity::Hard] {
                if !present.contains(&tier) {
                    problems.push(CorpusError::MissingTier {
                        dataset_id: dataset.to_string(),
                        complexity: tier,
                    });
                }
            }
        }
        problems
    }

    /// Both check passes, for the corpus-check command.
    pub fn check(&self, schemas: &BTreeMap<String, Arc<GraphSchema>>) -> Vec<CorpusError> {
        let mut problems = self.check_references(schemas);
        problems.extend(self.check_tiers());
        problems
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate question id `{id}`")]
    DuplicateId { id: String },
    #[error("question `{id}` references unknown dataset `{dataset_id}`")]
    UnknownDataset { id: String, dataset_id: String },
    #[error("dataset `{dataset_id}` has no {complexity} question")]
    MissingTier { dataset_id: String, complexity: Complexity },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schemas() -> BTreeMap<String, Arc<GraphSchema>> {
        let schema = GraphSchema::from_json_str(
            r#"{"dataset_id": "d1", "labels": {"A": {}}, "relationships": {}}"#,
        )
        .unwrap();
        BTreeMap::from([("d1".to_string(), Arc::new(schema))])
    }

    fn corpus(entries: &[(&str, &str, Complexity)]) -> QuestionCorpus {
        QuestionCorpus {
            entries: entries
                .iter()
                .map(|(id, dataset, complexity)| Question {
                    id: id.to_string(),
                    dataset_id: dataset.to_string(),
                    complexity: *complexity,
                    text: format!("question {id}"),
                })
                .collect(),
        }
    }

    #[test]
    fn complete_corpus_passes() {
        let c = corpus(&[
            ("e", "d1", Complexity::Easy),
            ("m", "d1", Complexity::Medium),
            ("h", "d1", Complexity::Hard),
        ]);
        assert!(c.check(&schemas()).is_empty());
    }

    #[test]
    fn all_violations_are_reported() {
        let c = corpus(&[
            ("e", "d1", Complexity::Easy),
            ("e", "d1", Complexity::Easy),
            ("x", "ghost", Complexity::Hard),
        ]);
        let problems = c.check(&schemas());
        let rendered: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
        assert!(rendered.iter().any(|p| p.contains("duplicate")), "{rendered:?}");
        assert!(rendered.iter().any(|p| p.contains("ghost")), "{rendered:?}");
        assert!(rendered.iter().any(|p| p.contains("Medium")), "{rendered:?}");
        assert!(rendered.iter().any(|p| p.contains("Hard")), "{rendered:?}");
    }
}
