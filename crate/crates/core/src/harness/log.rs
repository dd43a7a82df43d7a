//! Run-log persistence: newline-delimited JSON, one document per run record,
//! append-only. Entries carry the cell coordinates (dataset, model,
//! complexity) alongside the record so a log is self-contained for
//! aggregation.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Complexity, RunRecord};

/// One run-log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub dataset: String,
    pub model: String,
    pub complexity: Complexity,
    #[serde(flatten)]
    pub record: RunRecord,
}

/// Aborted-run bookkeeping: totals per cell key. Aborts produce no records
/// and are reported separately from execution failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AbortTally {
    pub total: usize,
    pub by_cell: BTreeMap<String, usize>,
}

impl AbortTally {
    pub fn bump(&mut self, cell_key: &str) {
        self.total += 1;
        *self.by_cell.entry(cell_key.to_string()).or_default() += 1;
    }
}

/// A completed experiment: every surviving record plus the abort tally.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub entries: Vec<LogEntry>,
    pub aborts: AbortTally,
}

pub fn write_entries<W: Write>(mut writer: W, entries: &[LogEntry]) -> Result<(), LogError> {
    for entry in entries {
        let line = serde_json::to_string(entry).map_err(LogError::Serialize)?;
        writer.write_all(line.as_bytes()).map_err(LogError::Write)?;
        writer.write_all(b"\n").map_err(LogError::Write)?;
    }
    Ok(())
}

pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<LogEntry>, LogError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| LogError::Open {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut entries = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(LogError::Write)?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line).map_err(|source| LogError::Line {
            line_number: index + 1,
            source,
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("cannot open run log {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("cannot write run log: {0}")]
    Write(std::io::Error),
    #[error("cannot serialize run record: {0}")]
    Serialize(serde_json::Error),
    #[error("corrupt run log at line {line_number}: {source}")]
    Line { line_number: usize, source: serde_json::Error },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Attempt, ExecutionMessage, MessageSource, Strategy};

    fn entry(dataset: &str, qee_failure: bool) -> LogEntry {
        let message = if qee_failure {
            ExecutionMessage::new(
                crate::model::MessageClass::SyntaxError,
                "bad",
                MessageSource::Embedded,
            )
        } else {
            ExecutionMessage::success(MessageSource::Embedded)
        };
        let record = RunRecord::from_attempts(
            "q1",
            Strategy::Is,
            3,
            vec![Attempt { query: "RETURN 1".into(), message }],
            99,
        )
        .unwrap();
        LogEntry {
            dataset: dataset.to_string(),
            model: "mock".to_string(),
            complexity: Complexity::Easy,
            record,
        }
    }

    #[test]
    fn roundtrip_preserves_entries() {
        let entries = vec![entry("crime", false), entry("fraud", true)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let mut buffer = Vec::new();
        write_entries(&mut buffer, &entries).unwrap();
        std::fs::write(&path, &buffer).unwrap();
        let back = read_entries(&path).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn corrupt_line_is_reported_with_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let mut buffer = Vec::new();
        write_entries(&mut buffer, &[entry("crime", false)]).unwrap();
        buffer.extend_from_slice(b"{not json\n");
        std::fs::write(&path, &buffer).unwrap();
        match read_entries(&path).unwrap_err() {
            LogError::Line { line_number, .. } => assert_eq!(line_number, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn log_lines_are_flat_json_documents() {
        let mut buffer = Vec::new();
        write_entries(&mut buffer, &[entry("crime", false)]).unwrap();
        let line = String::from_utf8(buffer).unwrap();
        let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        // Flattened record fields sit beside the cell coordinates.
        assert_eq!(value["dataset"], "crime");
        assert_eq!(value["strategy"], "IS");
        assert_eq!(value["qee"], false);
        assert_eq!(value["seed"], 99);
    }
}
