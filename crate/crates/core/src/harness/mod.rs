//! Experiment orchestration: load a configuration, run the full
//! (question x generator x strategy x budget) matrix with seeded
//! replications on a bounded worker pool, and persist deterministic run logs.
//!
//! Determinism contract: identical configuration (including the master seed)
//! produces byte-identical logs. Per-run seeds are derived from the cell
//! coordinates, so scheduling order and worker count cannot influence any
//! run; entries are emitted in cell-enumeration order.

pub mod aggregate;
pub mod corpus;
pub mod log;
pub mod report;
pub mod seed;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{ExecutorTarget, RemoteEndpoint};
use crate::generate::GeneratorConfig;
use crate::model::{MessageClass, Strategy};
use crate::schema::{GraphSchema, SchemaError};
use crate::strategy::run_strategy;

use corpus::{Question, QuestionCorpus};
use log::{AbortTally, LogEntry, RunLog};
use seed::derive_seed;

/// Environment variable consulted for the remote executor's bearer token.
/// The value is read at target construction and never logged.
pub const AUTH_TOKEN_ENV: &str = "RECYPHER_AUTH_TOKEN";

/// A generator plus the name it is reported under (the "model" axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedGenerator {
    pub name: String,
    #[serde(flatten)]
    pub config: GeneratorConfig,
}

/// Which executor the experiment runs against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecutorChoice {
    Embedded,
    Remote {
        endpoint: String,
        #[serde(default = "default_remote_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_remote_timeout_ms() -> u64 {
    10_000
}

fn default_budgets() -> Vec<u32> {
    vec![1, 2, 3, 4, 5]
}

fn default_replications() -> u32 {
    128
}

fn default_parallelism() -> usize {
    4
}

fn default_executor() -> ExecutorChoice {
    ExecutorChoice::Embedded
}

/// The experiment matrix definition, loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Schema files, one per dataset.
    pub datasets: Vec<PathBuf>,
    /// Question corpus file.
    pub questions: PathBuf,
    pub generators: Vec<NamedGenerator>,
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<u32>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_executor")]
    pub executor: ExecutorChoice,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| HarnessError::ConfigParse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Validate the matrix parameters and load every referenced file. All
    /// violations are collected before reporting, so one run surfaces the
    /// full list.
    pub fn prepare(&self) -> Result<LoadedExperiment, HarnessError> {
        let mut problems = Vec::new();

        if self.replications < 1 {
            problems.push("replications must be at least 1".to_string());
        }
        if self.budgets.is_empty() {
            problems.push("budgets list is empty".to_string());
        }
        if self.budgets.contains(&0) {
            problems.push("budgets must be positive".to_string());
        }
        if self.parallelism == 0 {
            problems.push("parallelism (workers) must be at least 1".to_string());
        }
        if self.strategies.is_empty() {
            problems.push("strategies list is empty".to_string());
        }
        if self.generators.is_empty() {
            problems.push("generators list is empty".to_string());
        }
        for generator in &self.generators {
            if generator.name.is_empty() {
                problems.push("a generator has an empty name".to_string());
            }
            for issue in generator.config.check() {
                problems.push(format!("generator `{}`: {issue}", generator.name));
            }
        }
        if let ExecutorChoice::Remote { endpoint, timeout_ms } = &self.executor {
            if endpoint.is_empty() {
                problems.push("remote executor endpoint is empty".to_string());
            }
            if *timeout_ms == 0 {
                problems.push("remote executor timeout must be positive".to_string());
            }
        }

        let mut schemas: BTreeMap<String, Arc<GraphSchema>> = BTreeMap::new();
        for path in &self.datasets {
            match GraphSchema::from_path(path) {
                Ok(schema) => {
                    let id = schema.dataset_id.clone();
                    if schemas.insert(id.clone(), Arc::new(schema)).is_some() {
                        problems.push(format!("dataset `{id}` is declared twice"));
                    }
                }
                Err(err) => problems.push(format!("schema {}: {err}", path.display())),
            }
        }

        let corpus = match QuestionCorpus::from_path(&self.questions) {
            Ok(corpus) => {
                // Tier completeness is a corpus-check concern; a run only
                // needs resolvable references.
                for issue in corpus.check_references(&schemas) {
                    problems.push(format!("corpus: {issue}"));
                }
                Some(corpus)
            }
            Err(err) => {
                problems.push(format!("corpus {}: {err}", self.questions.display()));
                None
            }
        };

        if !problems.is_empty() {
            return Err(HarnessError::InvalidConfig { problems });
        }
        Ok(LoadedExperiment {
            config: self.clone(),
            schemas,
            corpus: corpus.expect("no problems implies the corpus loaded"),
        })
    }
}

/// A validated configuration with every input file loaded.
#[derive(Debug)]
pub struct LoadedExperiment {
    pub config: ExperimentConfig,
    pub schemas: BTreeMap<String, Arc<GraphSchema>>,
    pub corpus: QuestionCorpus,
}

/// One cell of the experiment matrix.
struct Cell<'a> {
    question: &'a Question,
    generator: &'a NamedGenerator,
    strategy: Strategy,
    budget: u32,
}

impl Cell<'_> {
    fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            self.question.dataset_id, self.question.id, self.generator.name, self.strategy, self.budget
        )
    }
}

/// Run the whole matrix. Cells execute sequentially in enumeration order
/// (questions x generators x strategies x budgets); replications within a
/// cell run on the worker pool. When `sink` is given, each cell's entries
/// are appended and flushed as the cell completes, so an interrupted run
/// leaves a log that is valid up to the last finished cell.
pub fn run_experiment(
    experiment: &LoadedExperiment,
    mut sink: Option<&mut dyn std::io::Write>,
) -> Result<RunLog, HarnessError> {
    let config = &experiment.config;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|err| HarnessError::WorkerPool { detail: err.to_string() })?;

    let mut cells = Vec::new();
    for question in &experiment.corpus.entries {
        for generator in &config.generators {
            for &strategy in &config.strategies {
                for &budget in &config.budgets {
                    cells.push(Cell { question, generator, strategy, budget });
                }
            }
        }
    }

    let mut entries = Vec::new();
    let mut aborts = AbortTally::default();

    for cell in &cells {
        let schema = experiment
            .schemas
            .get(&cell.question.dataset_id)
            .expect("corpus check guarantees the dataset");
        let target = build_target(&config.executor, schema);
        let cell_key = cell.key();

        let results: Vec<Result<crate::strategy::StrategyResult, crate::strategy::StrategyError>> =
            pool.install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(|replication| {
                        let seed = derive_seed(config.master_seed, &cell_key, replication);
                        run_strategy(
                            cell.strategy,
                            &cell.question.id,
                            &cell.question.text,
                            schema,
                            &target,
                            &cell.generator.config,
                            cell.budget,
                            seed,
                        )
                    })
                    .collect()
            });

        let mut cell_entries = Vec::new();
        for result in results {
            match result {
                Ok(outcome) => {
                    // A record whose final message is a transport error tells
                    // us nothing about the generator; it measures the
                    // infrastructure. Such runs are tallied as aborts and
                    // excluded from the log rather than biasing the error
                    // rate.
                    let final_transport = outcome
                        .record
                        .attempts
                        .last()
                        .is_some_and(|a| a.message.class == MessageClass::TransportError);
                    if final_transport {
                        aborts.bump(&cell_key);
                    } else {
                        cell_entries.push(LogEntry {
                            dataset: cell.question.dataset_id.clone(),
                            model: cell.generator.name.clone(),
                            complexity: cell.question.complexity,
                            record: outcome.record,
                        });
                    }
                }
                Err(_) => aborts.bump(&cell_key),
            }
        }

        if let Some(writer) = sink.as_deref_mut() {
            log::write_entries(&mut *writer, &cell_entries)?;
            writer.flush().map_err(log::LogError::Write)?;
        }
        entries.extend(cell_entries);
    }

    Ok(RunLog { entries, aborts })
}

fn build_target(choice: &ExecutorChoice, schema: &Arc<GraphSchema>) -> ExecutorTarget {
    match choice {
        ExecutorChoice::Embedded => ExecutorTarget::Embedded(schema.clone()),
        ExecutorChoice::Remote { endpoint, timeout_ms } => ExecutorTarget::Remote(RemoteEndpoint {
            endpoint: endpoint.clone(),
            database: schema.dataset_id.clone(),
            timeout: Duration::from_millis(*timeout_ms),
            auth_token: std::env::var(AUTH_TOKEN_ENV).ok(),
        }),
    }
}

/// Fraction of a cell's replications that aborted, above which the cell is
/// flagged unreliable in the run summary.
pub const ABORT_FLAG_THRESHOLD: f64 = 0.01;

/// Per-cell QER summary of a finished run, as a markdown table. Cells whose
/// abort rate exceeds [`ABORT_FLAG_THRESHOLD`] are marked `unreliable`.
pub fn summarize(run: &RunLog, replications: u32) -> String {
    type Key = (String, String, Strategy, u32);
    let mut per_cell: BTreeMap<Key, (usize, usize)> = BTreeMap::new();
    for entry in &run.entries {
        let key = (
            entry.dataset.clone(),
            entry.model.clone(),
            entry.record.strategy,
            entry.record.budget,
        );
        let slot = per_cell.entry(key).or_insert((0, 0));
        slot.0 += 1;
        if entry.record.qee {
            slot.1 += 1;
        }
    }

    let mut out = String::from("| dataset | model | strategy | budget | runs | failures | qer | aborts | note |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for ((dataset, model, strategy, budget), (runs, failures)) in &per_cell {
        // Aborts are tallied per question-level cell key; sum the ones that
        // belong to this summary row.
        let prefix_matches = |key: &String| {
            let mut parts = key.split('|');
            let (Some(d), Some(_q), Some(m), Some(s), Some(b)) =
                (parts.next(), parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return false;
            };
            d == dataset.as_str()
                && m == model.as_str()
                && s == strategy.to_string()
                && b == budget.to_string()
        };
        let aborted: usize = run
            .aborts
            .by_cell
            .iter()
            .filter(|(key, _)| prefix_matches(key))
            .map(|(_, count)| count)
            .sum();
        let qer = *failures as f64 / (*runs).max(1) as f64;
        let note = if replications > 0 && aborted as f64 / replications as f64 > ABORT_FLAG_THRESHOLD {
            "unreliable"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "| {dataset} | {model} | {strategy} | {budget} | {runs} | {failures} | {qer:.4} | {aborted} | {note} |"
        );
    }
    let _ = writeln!(out, "\nTotal aborts: {}", run.aborts.total);
    out
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config {path} is not valid JSON: {source}")]
    ConfigParse { path: String, source: serde_json::Error },
    #[error("invalid experiment config:\n{}", problems.join("\n"))]
    InvalidConfig { problems: Vec<String> },
    #[error("cannot build worker pool: {detail}")]
    WorkerPool { detail: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Log(#[from] log::LogError),
    #[error("trajectory group {group} has no records")]
    EmptyGroup { group: String },
    #[error("trajectory is missing budget {budget}")]
    MissingBudget { budget: u32 },
    #[error("trajectory curve has no points")]
    EmptyCurve,
    #[error("trajectory has duplicate budget {budget}")]
    DuplicateBudget { budget: u32 },
    #[error("trajectory value {value} at budget {budget} is outside [0, 1]")]
    ValueOutOfRange { budget: u32, value: f64 },
    #[error("knee selection needs at least 3 points, got {points}")]
    CurveTooShort { points: usize },
    #[error(transparent)]
    Report(#[from] report::ReportError),
}
