//! Metric formalism shared by every other module: executability classification,
//! per-run error indicators (QEE), grouped error rates (QER), baseline deltas,
//! and the executability/accuracy joint tally.
//!
//! Everything here is a plain immutable value and every function is pure, so
//! the types can be shared freely across worker threads.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Classification of an execution status message.
///
/// `Success` is the only non-error class; every other variant is a member of
/// the error-message set that defines execution failure. `TransportError`
/// covers infrastructure faults reaching a remote executor and is kept
/// distinct from engine-originated classes so reports can separate
/// infrastructure noise from genuine generation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageClass {
    Success,
    SyntaxError,
    UnknownLabel,
    UnknownRelationshipType,
    UnknownProperty,
    MalformedPath,
    DirectionViolation,
    TransportError,
}

impl MessageClass {
    /// True iff the class belongs to the error-message set.
    pub fn is_error(self) -> bool {
        !matches!(self, MessageClass::Success)
    }
}

impl fmt::Display for MessageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MessageClass::Success => "Success",
            MessageClass::SyntaxError => "SyntaxError",
            MessageClass::UnknownLabel => "UnknownLabel",
            MessageClass::UnknownRelationshipType => "UnknownRelationshipType",
            MessageClass::UnknownProperty => "UnknownProperty",
            MessageClass::MalformedPath => "MalformedPath",
            MessageClass::DirectionViolation => "DirectionViolation",
            MessageClass::TransportError => "TransportError",
        };
        f.write_str(name)
    }
}

/// Which executor produced a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageSource {
    Embedded,
    Remote,
}

/// The status message half of an execution outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionMessage {
    pub class: MessageClass,
    pub detail: String,
    pub source: MessageSource,
}

impl ExecutionMessage {
    pub fn new(class: MessageClass, detail: impl Into<String>, source: MessageSource) -> Self {
        ExecutionMessage { class, detail: detail.into(), source }
    }

    /// The canonical success message for a given executor.
    pub fn success(source: MessageSource) -> Self {
        ExecutionMessage::new(MessageClass::Success, "query accepted", source)
    }

    pub fn is_error(&self) -> bool {
        self.class.is_error()
    }
}

impl fmt::Display for ExecutionMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.detail)
    }
}

/// A single scalar cell of a result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

/// The `(result, message)` pair returned by an executor.
///
/// The constructors enforce the structural asymmetry of the outcome space:
/// an error message never carries a result.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutcome {
    result: Option<Vec<Vec<Scalar>>>,
    message: ExecutionMessage,
}

impl ExecutionOutcome {
    /// Build a successful outcome.
    ///
    /// Panics if `message` is an error class; that would violate the outcome
    /// invariant and is a programming error in the executor.
    pub fn success(rows: Vec<Vec<Scalar>>, message: ExecutionMessage) -> Self {
        assert!(!message.is_error(), "success outcome built from an error message");
        ExecutionOutcome { result: Some(rows), message }
    }

    /// Build a failed outcome; the result is absent by construction.
    pub fn failure(message: ExecutionMessage) -> Self {
        assert!(message.is_error(), "failure outcome built from a success message");
        ExecutionOutcome { result: None, message }
    }

    pub fn result(&self) -> Option<&[Vec<Scalar>]> {
        self.result.as_deref()
    }

    pub fn message(&self) -> &ExecutionMessage {
        &self.message
    }

    pub fn into_message(self) -> ExecutionMessage {
        self.message
    }
}

/// Executability indicator: 1 for a successfully executed query, 0 for any
/// error-class message. A pure function of `message.class`.
pub fn classify_executability(message: &ExecutionMessage) -> u8 {
    if message.class.is_error() {
        0
    } else {
        1
    }
}

/// Joint tally of executability and (externally supplied) accuracy labels.
///
/// There is deliberately no cell for "failed but accurate": a query that does
/// not execute cannot produce a correct result, so that cell is undefined.
/// `unlabeled` counts the executed records that lacked an accuracy label and
/// were therefore filed under `p10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JointTally {
    pub p11: usize,
    pub p10: usize,
    pub p00: usize,
    pub unlabeled: usize,
}

impl JointTally {
    pub fn total(&self) -> usize {
        self.p11 + self.p10 + self.p00
    }
}

/// The two retry strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "RAS")]
    Ras,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Is => "IS",
            Strategy::Ras => "RAS",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "IS" => Ok(Strategy::Is),
            "RAS" => Ok(Strategy::Ras),
            other => Err(format!("unknown strategy `{other}` (expected IS or RAS)")),
        }
    }
}

/// Strategy axis of an aggregation group. `Baseline` is the synthetic single
/// pass row computed as the average of IS and RAS at budget 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroupStrategy {
    #[serde(rename = "Q")]
    Baseline,
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "RAS")]
    Ras,
}

impl From<Strategy> for GroupStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Is => GroupStrategy::Is,
            Strategy::Ras => GroupStrategy::Ras,
        }
    }
}

impl fmt::Display for GroupStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupStrategy::Baseline => "Q",
            GroupStrategy::Is => "IS",
            GroupStrategy::Ras => "RAS",
        })
    }
}

/// Question difficulty tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Complexity {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Complexity::Easy => "Easy",
            Complexity::Medium => "Medium",
            Complexity::Hard => "Hard",
        })
    }
}

impl std::str::FromStr for Complexity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Complexity::Easy),
            "medium" => Ok(Complexity::Medium),
            "hard" => Ok(Complexity::Hard),
            other => Err(format!("unknown complexity `{other}` (expected Easy, Medium or Hard)")),
        }
    }
}

/// Identifies one aggregation cell. `complexity = None` means the group pools
/// all complexity tiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub dataset: String,
    pub model: String,
    pub complexity: Option<Complexity>,
    pub strategy: GroupStrategy,
    pub budget: u32,
}

impl GroupKey {
    /// True when the two keys describe the same record population (dataset,
    /// model and complexity), i.e. they differ only by strategy or budget.
    pub fn same_population(&self, other: &GroupKey) -> bool {
        self.dataset == other.dataset
            && self.model == other.model
            && self.complexity == other.complexity
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let complexity = match self.complexity {
            Some(c) => c.to_string(),
            None => "all".to_string(),
        };
        write!(f, "{}/{}/{}/{}@{}", self.dataset, self.model, complexity, self.strategy, self.budget)
    }
}

/// One generate-and-execute attempt inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub query: String,
    pub message: ExecutionMessage,
}

/// The trace of one strategy execution: every attempt up to termination, the
/// returned query, and the binary error indicator for the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub question_id: String,
    pub strategy: Strategy,
    pub budget: u32,
    pub attempts: Vec<Attempt>,
    pub final_query: String,
    pub qee: bool,
    pub seed: u64,
}

impl RunRecord {
    /// Assemble a record from an attempt trace, deriving `final_query` and
    /// `qee` and checking the trace invariants: at least one attempt, at most
    /// `budget` attempts, and no success anywhere but the final position.
    pub fn from_attempts(
        question_id: impl Into<String>,
        strategy: Strategy,
        budget: u32,
        attempts: Vec<Attempt>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if attempts.is_empty() {
            return Err(ModelError::NoAttempts);
        }
        if attempts.len() > budget as usize {
            return Err(ModelError::BudgetExceeded { got: attempts.len(), budget });
        }
        if attempts.iter().rev().skip(1).any(|a| !a.message.is_error()) {
            return Err(ModelError::SuccessNotLast);
        }
        let last = attempts.last().expect("non-empty");
        let qee = last.message.is_error();
        let final_query = last.query.clone();
        Ok(RunRecord {
            question_id: question_id.into(),
            strategy,
            budget,
            attempts,
            final_query,
            qee,
            seed,
        })
    }

    /// Re-check the construction invariants, e.g. after deserializing a log.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        let rebuilt = RunRecord::from_attempts(
            self.question_id.clone(),
            self.strategy,
            self.budget,
            self.attempts.clone(),
            self.seed,
        )?;
        if rebuilt.qee != self.qee || rebuilt.final_query != self.final_query {
            return Err(ModelError::InconsistentRecord);
        }
        Ok(())
    }
}

/// Query execution error indicator for one run: 1 iff the final attempt's
/// message is an error.
pub fn qee(record: &RunRecord) -> Result<u8, ModelError> {
    let last = record.attempts.last().ok_or(ModelError::NoAttempts)?;
    Ok(if last.message.is_error() { 1 } else { 0 })
}

/// Aggregated error rate for one group of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QerStats {
    pub group_key: GroupKey,
    pub mean: f64,
    /// Sample (n-1 denominator) standard deviation of the per-run indicator.
    /// Zero when the group holds a single run.
    pub std_dev: f64,
    pub n_runs: usize,
}

/// Mean and sample standard deviation of a set of 0/1 indicators.
fn binary_stats(values: &[u8]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let std_dev = if n < 2 {
        0.0
    } else {
        let ss = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    (mean, std_dev)
}

/// Error-rate statistics over a group of records that share `group_key`.
///
/// Dataset, model and complexity cannot be read off a record, so the caller
/// is responsible for grouping on those axes; strategy and budget are checked
/// here when the key names a concrete strategy.
pub fn qer(records: &[RunRecord], group_key: GroupKey) -> Result<QerStats, ModelError> {
    if records.is_empty() {
        return Err(ModelError::EmptyRecords);
    }
    for record in records {
        let strategy_ok = match group_key.strategy {
            GroupStrategy::Baseline => record.budget == 1,
            GroupStrategy::Is => record.strategy == Strategy::Is && record.budget == group_key.budget,
            GroupStrategy::Ras => record.strategy == Strategy::Ras && record.budget == group_key.budget,
        };
        if !strategy_ok {
            return Err(ModelError::GroupKeyMismatch { key: group_key.to_string() });
        }
    }
    let values: Vec<u8> = records.iter().map(qee).collect::<Result<_, _>>()?;
    let (mean, std_dev) = binary_stats(&values);
    Ok(QerStats { group_key, mean, std_dev, n_runs: records.len() })
}

/// Error-rate reduction of `scaled` relative to `baseline` (positive means
/// the scaled strategy fails less often).
pub fn delta(baseline: &QerStats, scaled: &QerStats) -> Result<f64, ModelError> {
    if !baseline.group_key.same_population(&scaled.group_key) {
        return Err(ModelError::PopulationMismatch {
            baseline: baseline.group_key.to_string(),
            scaled: scaled.group_key.to_string(),
        });
    }
    Ok(baseline.mean - scaled.mean)
}

/// Tally records into the executability/accuracy joint cells.
///
/// Accuracy labels are an external input keyed by question id and only apply
/// to executed records; a label of `true` attached to a failed record would
/// populate the undefined cell and is rejected. Executed records without a
/// label are counted under `p10` and reported via `unlabeled`.
pub fn tally_joint(
    records: &[RunRecord],
    accuracy_labels: Option<&BTreeMap<String, bool>>,
) -> Result<JointTally, ModelError> {
    let mut tally = JointTally::default();
    for record in records {
        let failed = qee(record)? == 1;
        let label = accuracy_labels.and_then(|m| m.get(&record.question_id)).copied();
        if failed {
            if label == Some(true) {
                return Err(ModelError::LabelOnFailedRecord {
                    question_id: record.question_id.clone(),
                });
            }
            tally.p00 += 1;
        } else {
            match label {
                Some(true) => tally.p11 += 1,
                Some(false) => tally.p10 += 1,
                None => {
                    tally.p10 += 1;
                    tally.unlabeled += 1;
                }
            }
        }
    }
    Ok(tally)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("record set is empty")]
    EmptyRecords,
    #[error("run record has no attempts")]
    NoAttempts,
    #[error("run record has {got} attempts, exceeding budget {budget}")]
    BudgetExceeded { got: usize, budget: u32 },
    #[error("a successful attempt must be the last recorded attempt")]
    SuccessNotLast,
    #[error("record fields disagree with the attempt trace")]
    InconsistentRecord,
    #[error("record does not match group key {key}")]
    GroupKeyMismatch { key: String },
    #[error("stats describe different populations: {baseline} vs {scaled}")]
    PopulationMismatch { baseline: String, scaled: String },
    #[error("accuracy label marks failed record for question `{question_id}` as accurate; that cell is undefined")]
    LabelOnFailedRecord { question_id: String },
}
