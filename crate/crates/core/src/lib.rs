//! recypher — an inference-scaling harness for natural-language-to-Cypher
//! query generation.
//!
//! The pipeline: a generator backend samples a Cypher query conditioned on a
//! question and a property-graph schema; an executor runs it and classifies
//! the outcome; a budgeted retry strategy either resamples independently
//! ([`strategy::run_is`]) or feeds each failure back into the prompt
//! ([`strategy::run_ras`]); and the harness replicates every configuration
//! cell under derived seeds and aggregates query execution error rates.
//!
//! The embedded executor is a Cypher-subset parser and schema validator — a
//! deterministic stand-in for a live graph database that reports the same
//! classes of error (unknown labels, unknown relationship types, endpoint and
//! direction violations, unknown properties, malformed paths, syntax errors).

#![forbid(unsafe_code)]

pub mod cypher;
pub mod exec;
pub mod generate;
pub mod harness;
pub mod model;
pub mod schema;
pub mod strategy;

pub use exec::{classify_remote_response, execute, ExecutorTarget, RemoteEndpoint};
pub use generate::{build_prompt, extract_query, GeneratorBackend, GeneratorConfig, ReflectionContext};
pub use model::{
    classify_executability, delta, qee, qer, tally_joint, Complexity, ExecutionMessage,
    ExecutionOutcome, GroupKey, GroupStrategy, JointTally, MessageClass, MessageSource, QerStats,
    RunRecord, Strategy,
};
pub use schema::GraphSchema;
pub use strategy::{append_failure, run_is, run_ras, run_strategy, StrategyResult};
