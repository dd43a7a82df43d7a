//! The two budgeted retry loops.
//!
//! Independent scaling (`run_is`) resamples from the unchanged initial
//! context until a query executes or the budget runs out. Reflection
//! augmented scaling (`run_ras`) additionally appends every failed query and
//! its error message to the context, so later samples condition on the
//! accumulated feedback. Both return the last sampled query as a fallback
//! when every attempt fails.
//!
//! Each run owns its context and a ChaCha stream seeded from the run seed;
//! nothing is shared, so any number of runs may execute concurrently.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::{execute, ExecutorTarget};
use crate::generate::{Failure, GenerationError, GeneratorConfig, ReflectionContext};
use crate::model::{Attempt, ExecutionMessage, RunRecord, Strategy};
use crate::schema::GraphSchema;

/// A finished run: its record plus the final conditioning context (which has
/// an empty failure list for IS, and one entry per failed attempt for RAS).
#[derive(Debug)]
pub struct StrategyResult {
    pub record: RunRecord,
    pub context_final: ReflectionContext,
}

#[derive(Debug, Error)]
pub enum StrategyError {
    /// The generator itself failed (completion endpoint unreachable, script
    /// missing). The run is aborted: it consumed no budget and produces no
    /// record, and the harness tallies it separately from execution failures.
    #[error("generation aborted: {0}")]
    Aborted(#[from] GenerationError),
    #[error("cannot append a success message to the reflection context")]
    AppendSuccess,
}

/// Memoryless retry: every attempt conditions on the initial context only.
///
/// Panics if `budget` is zero; budgets are validated at configuration time.
pub fn run_is(
    question_id: &str,
    question: &str,
    schema: &Arc<GraphSchema>,
    target: &ExecutorTarget,
    generator: &GeneratorConfig,
    budget: u32,
    seed: u64,
) -> Result<StrategyResult, StrategyError> {
    run_loop(Strategy::Is, question_id, question, schema, target, generator, budget, seed)
}

/// Feedback-driven retry: each failure extends the context before the next
/// sample. At budget 1 this is byte-for-byte the same behavior as [`run_is`].
pub fn run_ras(
    question_id: &str,
    question: &str,
    schema: &Arc<GraphSchema>,
    target: &ExecutorTarget,
    generator: &GeneratorConfig,
    budget: u32,
    seed: u64,
) -> Result<StrategyResult, StrategyError> {
    run_loop(Strategy::Ras, question_id, question, schema, target, generator, budget, seed)
}

/// Dispatch on the strategy tag; the harness uses this entry point.
#[allow(clippy::too_many_arguments)]
pub fn run_strategy(
    strategy: Strategy,
    question_id: &str,
    question: &str,
    schema: &Arc<GraphSchema>,
    target: &ExecutorTarget,
    generator: &GeneratorConfig,
    budget: u32,
    seed: u64,
) -> Result<StrategyResult, StrategyError> {
    run_loop(strategy, question_id, question, schema, target, generator, budget, seed)
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    strategy: Strategy,
    question_id: &str,
    question: &str,
    schema: &Arc<GraphSchema>,
    target: &ExecutorTarget,
    generator: &GeneratorConfig,
    budget: u32,
    seed: u64,
) -> Result<StrategyResult, StrategyError> {
    assert!(budget >= 1, "strategy budget must be at least 1");
    // Reflection is a structural property of the loop, not of the generator:
    // IS builds prompts with reflection disabled and never grows the context,
    // even if a feedback-capable backend is plugged in.
    let reflect = strategy == Strategy::Ras;

    let mut context = ReflectionContext::new(question, schema.clone());
    let mut generator = generator.instantiate(question_id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts: Vec<Attempt> = Vec::with_capacity(budget as usize);

    for _attempt in 1..=budget {
        // An extraction miss becomes the empty query, which executes to a
        // syntax error and consumes budget like any other failed attempt.
        let query = generator.generate(&context, reflect, &mut rng)?.unwrap_or_default();
        let message = execute(&query, target).into_message();
        let failed = message.is_error();
        attempts.push(Attempt { query: query.clone(), message: message.clone() });
        if !failed {
            break;
        }
        if reflect {
            context = append_failure(context, query, message)?;
        }
    }

    let record = RunRecord::from_attempts(question_id, strategy, budget, attempts, seed)
        .expect("loop construction satisfies the record invariants");
    Ok(StrategyResult { record, context_final: context })
}

/// Extend a reflection context with one failed attempt. Appending a success
/// message is a contract violation.
pub fn append_failure(
    context: ReflectionContext,
    query: String,
    message: ExecutionMessage,
) -> Result<ReflectionContext, StrategyError> {
    if !message.is_error() {
        return Err(StrategyError::AppendSuccess);
    }
    Ok(context.appended(Failure { query, message }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MessageClass, MessageSource};

    fn schema() -> Arc<GraphSchema> {
        Arc::new(
            GraphSchema::from_json_str(
                r#"{
                    "dataset_id": "test",
                    "labels": {"Person": {"name": "string"}},
                    "relationships": {"KNOWS": {"pairs": [["Person", "Person"]], "properties": {}}}
                }"#,
            )
            .unwrap(),
        )
    }

    const GOOD: &str = "MATCH (p:Person) RETURN p.name";
    const BAD: &str = "MATCH (p:Nope) RETURN p";

    fn scripted(queries: &[&str]) -> GeneratorConfig {
        GeneratorConfig::scripted_single(queries.iter().map(|q| q.to_string()).collect())
    }

    fn run(
        strategy: Strategy,
        generator: &GeneratorConfig,
        budget: u32,
        seed: u64,
    ) -> StrategyResult {
        let schema = schema();
        let target = ExecutorTarget::Embedded(schema.clone());
        run_strategy(strategy, "q1", "question", &schema, &target, generator, budget, seed).unwrap()
    }

    #[test]
    fn is_stops_at_first_success() {
        let result = run(Strategy::Is, &scripted(&[BAD, GOOD]), 5, 0);
        assert_eq!(result.record.attempts.len(), 2);
        assert!(!result.record.qee);
        assert_eq!(result.record.final_query, GOOD);
        assert!(result.context_final.failures().is_empty(), "IS never grows the context");
    }

    #[test]
    fn is_returns_last_query_at_exhaustion() {
        let result = run(Strategy::Is, &scripted(&[BAD, BAD, BAD]), 3, 0);
        assert_eq!(result.record.attempts.len(), 3);
        assert!(result.record.qee);
        assert_eq!(result.record.final_query, BAD);
    }

    #[test]
    fn ras_records_failures_in_context() {
        let result = run(Strategy::Ras, &scripted(&[BAD, BAD, GOOD]), 5, 0);
        assert_eq!(result.record.attempts.len(), 3);
        assert!(!result.record.qee);
        assert_eq!(result.context_final.failures().len(), 2);
        assert_eq!(result.context_final.failures()[0].query, BAD);
    }

    #[test]
    fn ras_context_length_equals_failures_at_exhaustion() {
        let result = run(Strategy::Ras, &scripted(&[BAD, BAD]), 2, 0);
        assert!(result.record.qee);
        assert_eq!(result.context_final.failures().len(), 2);
    }

    #[test]
    fn t1_traces_are_identical_across_strategies() {
        for seed in 0..50 {
            let generator = GeneratorConfig::stochastic(0.5, 0.5);
            let is = run(Strategy::Is, &generator, 1, seed);
            let ras = run(Strategy::Ras, &generator, 1, seed);
            assert_eq!(is.record.attempts, ras.record.attempts, "seed {seed}");
            assert_eq!(is.record.qee, ras.record.qee);
            assert_eq!(is.record.final_query, ras.record.final_query);
        }
    }

    #[test]
    fn context_insensitive_generator_makes_strategies_agree() {
        for budget in 1..=5u32 {
            let generator = scripted(&[BAD, BAD, BAD, BAD, GOOD]);
            let is = run(Strategy::Is, &generator, budget, 9);
            let ras = run(Strategy::Ras, &generator, budget, 9);
            assert_eq!(is.record.attempts, ras.record.attempts, "budget {budget}");
        }
    }

    #[test]
    fn stochastic_is_failure_rate_tracks_closed_form() {
        // p0 = 0.4, T = 5: failure probability 0.4^5 = 0.01024. With 4000
        // runs the tolerance 3*sqrt(p(1-p)/n) is about 0.0048.
        let generator = GeneratorConfig::stochastic(0.4, 1.0);
        let runs = 4000;
        let failures = (0..runs)
            .filter(|&seed| run(Strategy::Is, &generator, 5, seed).record.qee)
            .count();
        let rate = failures as f64 / runs as f64;
        let expected = 0.4f64.powi(5);
        let tolerance = 3.0 * (expected * (1.0 - expected) / runs as f64).sqrt();
        assert!(
            (rate - expected).abs() <= tolerance,
            "IS rate {rate} vs closed form {expected} (tolerance {tolerance})"
        );
    }

    #[test]
    fn stochastic_ras_failure_rate_tracks_closed_form() {
        // p0 = 0.4, gamma = 0.5, T = 3: 0.4 * 0.2 * 0.1 = 0.008.
        let generator = GeneratorConfig::stochastic(0.4, 0.5);
        let runs = 4000;
        let failures = (0..runs)
            .filter(|&seed| run(Strategy::Ras, &generator, 3, seed + 10_000).record.qee)
            .count();
        let rate = failures as f64 / runs as f64;
        let expected = 0.008;
        let tolerance = 3.0 * (expected * (1.0 - expected) / runs as f64).sqrt();
        assert!(
            (rate - expected).abs() <= tolerance,
            "RAS rate {rate} vs closed form {expected} (tolerance {tolerance})"
        );
    }

    #[test]
    fn append_failure_checks_and_preserves_order() {
        let ctx = ReflectionContext::new("q", schema());
        let err = ExecutionMessage::new(MessageClass::SyntaxError, "bad", MessageSource::Embedded);
        let ctx = append_failure(ctx, "q1".into(), err.clone()).unwrap();
        assert_eq!(ctx.failures().len(), 1);
        let ctx = append_failure(ctx, "q2".into(), err.clone()).unwrap();
        let ctx = append_failure(ctx, "q3".into(), err).unwrap();
        let order: Vec<&str> = ctx.failures().iter().map(|f| f.query.as_str()).collect();
        assert_eq!(order, vec!["q1", "q2", "q3"]);

        let ok = ExecutionMessage::success(MessageSource::Embedded);
        assert!(matches!(
            append_failure(ctx, "q4".into(), ok).unwrap_err(),
            StrategyError::AppendSuccess
        ));
    }

    #[test]
    fn generation_abort_surfaces_as_error() {
        // A scripted generator with no sequence for this question aborts.
        let sequences = std::collections::BTreeMap::from([("other".to_string(), vec!["x".to_string()])]);
        let generator = GeneratorConfig {
            backend: crate::generate::GeneratorBackend::Scripted { sequences },
            temperature: 0.9,
        };
        let schema = schema();
        let target = ExecutorTarget::Embedded(schema.clone());
        let result = run_is("q1", "question", &schema, &target, &generator, 3, 0);
        assert!(matches!(result.unwrap_err(), StrategyError::Aborted(_)));
    }

    #[test]
    #[should_panic(expected = "budget")]
    fn zero_budget_panics() {
        let _ = run(Strategy::Is, &scripted(&[GOOD]), 0, 0);
    }

    #[test]
    fn budget_bound_holds_for_all_scripted_patterns() {
        // Every fail/success pattern of length up to 5, run at T = len.
        for len in 1..=5u32 {
            for bits in 0..(1u32 << len) {
                let pattern: Vec<&str> =
                    (0..len).map(|i| if bits & (1 << i) != 0 { GOOD } else { BAD }).collect();
                let generator = scripted(&pattern);
                for strategy in [Strategy::Is, Strategy::Ras] {
                    let result = run(strategy, &generator, len, 1);
                    let first_success = pattern.iter().position(|q| *q == GOOD);
                    let expected_attempts = match first_success {
                        Some(i) => i + 1,
                        None => len as usize,
                    };
                    assert_eq!(result.record.attempts.len(), expected_attempts);
                    assert_eq!(result.record.qee, first_success.is_none());
                }
            }
        }
    }
}
