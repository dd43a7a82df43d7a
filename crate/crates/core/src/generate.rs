//! Conditional query generation: prompt construction with schema injection
//! and reflection blocks, extraction of a query from a raw completion, and
//! three interchangeable backends.
//!
//! * `RemoteCompletion` posts the prompt to an HTTP completion endpoint.
//! * `Scripted` replays a fixed per-question sequence, ignoring the context —
//!   useful for exact control-flow tests.
//! * `Stochastic` is a synthetic generator that emits an invalid query with
//!   probability `p0 * gamma^k`, where `k` counts the failures recorded in
//!   the conditioning context. It gives the harness closed-form error rates
//!   to test against and is in no way a model of a real LLM.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::ExecutionMessage;
use crate::schema::GraphSchema;

/// Fixed instruction prepended to every reflection block.
pub const CORRECTIVE_INSTRUCTION: &str =
    "The previous query failed with the following error; produce a corrected query.";

/// Fixed prompt header for all backends.
pub const PROMPT_HEADER: &str = "You are a Cypher query generator. Write one read-only Cypher \
query that answers the question against the provided graph schema. Reply with only the query.";

/// One recorded failure: the query that failed and the message it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub query: String,
    pub message: ExecutionMessage,
}

/// The conditioning context: question, schema, and an append-only list of
/// failures. Failures are only reachable through [`ReflectionContext::appended`],
/// which keeps the list append-only and error-only.
#[derive(Debug, Clone)]
pub struct ReflectionContext {
    pub question: String,
    pub schema: Arc<GraphSchema>,
    failures: Vec<Failure>,
}

impl ReflectionContext {
    pub fn new(question: impl Into<String>, schema: Arc<GraphSchema>) -> Self {
        ReflectionContext { question: question.into(), schema, failures: Vec::new() }
    }

    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    /// Extend the context with one more failure. The message must be an
    /// error; the strategy layer checks this before calling.
    pub fn appended(mut self, failure: Failure) -> Self {
        debug_assert!(failure.message.is_error(), "reflection context only records failures");
        self.failures.push(failure);
        self
    }
}

/// Build the generation prompt: header, schema, question, and — when
/// reflection is enabled — one block per recorded failure in order.
/// Byte-identical for identical inputs.
pub fn build_prompt(context: &ReflectionContext, include_reflection: bool) -> String {
    let mut prompt = format!(
        "{PROMPT_HEADER}\n\nSchema:\n{}\nQuestion: {}\n",
        context.schema.summary(),
        context.question,
    );
    if include_reflection {
        for failure in &context.failures {
            prompt.push_str(&format!(
                "\n{CORRECTIVE_INSTRUCTION}\nFailed query:\n{}\nError: {}\n",
                failure.query, failure.message,
            ));
        }
    }
    prompt
}

/// Pull a query out of a raw completion.
///
/// The first fenced code block wins when present; otherwise the span starting
/// at the first Cypher keyword (MATCH, OPTIONAL, WITH, RETURN) is taken, cut
/// at the first blank line, sentence-ending period or semicolon outside a
/// string literal. `None` signals that no query could be extracted.
pub fn extract_query(raw: &str) -> Option<String> {
    if let Some(fenced) = first_fenced_block(raw) {
        let query = trim_extracted(fenced);
        return if query.is_empty() { None } else { Some(query) };
    }
    let start = first_keyword_offset(raw)?;
    let span = &raw[start..];
    let span = cut_at_blank_line(span);
    let span = cut_at_sentence_end(span);
    let query = trim_extracted(span);
    if query.is_empty() {
        None
    } else {
        Some(query)
    }
}

fn first_fenced_block(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after_fence = &raw[open + 3..];
    // Skip an optional language tag up to the end of the fence line.
    let content_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(after_fence.len());
    let content = &after_fence[content_start..];
    match content.find("```") {
        Some(close) => Some(&content[..close]),
        None => Some(content),
    }
}

fn first_keyword_offset(raw: &str) -> Option<usize> {
    const KEYWORDS: [&str; 4] = ["MATCH", "OPTIONAL", "WITH", "RETURN"];
    let upper = raw.to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let mut best: Option<usize> = None;
    for keyword in KEYWORDS {
        let mut from = 0;
        while let Some(pos) = upper[from..].find(keyword) {
            let at = from + pos;
            let before_ok = at == 0 || !is_word_byte(bytes[at - 1]);
            let after = at + keyword.len();
            let after_ok = after >= bytes.len() || !is_word_byte(bytes[after]);
            if before_ok && after_ok {
                best = Some(best.map_or(at, |b| b.min(at)));
                break;
            }
            from = at + 1;
        }
    }
    best
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn cut_at_blank_line(span: &str) -> &str {
    match span.find("\n\n").into_iter().chain(span.find("\r\n\r\n")).min() {
        Some(at) => &span[..at],
        None => span,
    }
}

/// Cut at the first `;` or at a `.` followed by whitespace or end of text,
/// skipping string literals. Property-access dots are always followed by an
/// identifier character, so they survive.
fn cut_at_sentence_end(span: &str) -> &str {
    let bytes = span.as_bytes();
    let mut in_string: Option<u8> = None;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match in_string {
            Some(quote) => {
                if b == b'\\' {
                    i += 1;
                } else if b == quote {
                    in_string = None;
                }
            }
            None => match b {
                b'"' | b'\'' => in_string = Some(b),
                b';' => return &span[..i],
                b'.' => {
                    let next = bytes.get(i + 1);
                    if next.is_none() || next.is_some_and(|n| n.is_ascii_whitespace()) {
                        return &span[..i];
                    }
                }
                _ => {}
            },
        }
        i += 1;
    }
    span
}

fn trim_extracted(text: &str) -> String {
    text.trim().trim_end_matches(';').trim().to_string()
}

/// Backend selection plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorBackend {
    RemoteCompletion {
        endpoint: String,
        model: String,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
        #[serde(default = "default_completion_timeout_ms")]
        timeout_ms: u64,
    },
    /// Per-question replay sequences keyed by question id; `"*"` is the
    /// fallback key. A sequence shorter than the budget repeats its final
    /// entry.
    Scripted { sequences: BTreeMap<String, Vec<String>> },
    Stochastic { p0: f64, gamma: f64 },
}

fn default_max_tokens() -> u32 {
    512
}

fn default_completion_timeout_ms() -> u64 {
    30_000
}

pub fn default_temperature() -> f64 {
    0.9
}

/// A configured generator. `temperature` only reaches the remote backend;
/// the synthetic backends have no decoding temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub backend: GeneratorBackend,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

impl GeneratorConfig {
    pub fn stochastic(p0: f64, gamma: f64) -> Self {
        GeneratorConfig {
            backend: GeneratorBackend::Stochastic { p0, gamma },
            temperature: default_temperature(),
        }
    }

    pub fn scripted_single(queries: Vec<String>) -> Self {
        let sequences = BTreeMap::from([("*".to_string(), queries)]);
        GeneratorConfig {
            backend: GeneratorBackend::Scripted { sequences },
            temperature: default_temperature(),
        }
    }

    /// Collect every parameter violation (empty = valid).
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.temperature < 0.0 || self.temperature.is_nan() {
            problems.push(format!("temperature must be >= 0, got {}", self.temperature));
        }
        match &self.backend {
            GeneratorBackend::RemoteCompletion { endpoint, model, max_tokens, timeout_ms } => {
                if endpoint.is_empty() {
                    problems.push("remote completion endpoint is empty".to_string());
                }
                if model.is_empty() {
                    problems.push("remote completion model id is empty".to_string());
                }
                if *max_tokens == 0 {
                    problems.push("max_tokens must be positive".to_string());
                }
                if *timeout_ms == 0 {
                    problems.push("timeout_ms must be positive".to_string());
                }
            }
            GeneratorBackend::Scripted { sequences } => {
                if sequences.is_empty() {
                    problems.push("scripted backend has no sequences".to_string());
                }
                for (id, queries) in sequences {
                    if queries.is_empty() {
                        problems.push(format!("scripted sequence `{id}` is empty"));
                    }
                }
            }
            GeneratorBackend::Stochastic { p0, gamma } => {
                if !(0.0..=1.0).contains(p0) {
                    problems.push(format!("stochastic p0 must lie in [0, 1], got {p0}"));
                }
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    problems.push(format!("stochastic gamma must lie in (0, 1], got {gamma}"));
                }
            }
        }
        problems
    }

    /// Build the per-run generator state for one question.
    pub fn instantiate(&self, question_id: &str) -> Result<RunGenerator, GenerationError> {
        let backend = match &self.backend {
            GeneratorBackend::RemoteCompletion { endpoint, model, max_tokens, timeout_ms } => {
                RunBackend::Remote {
                    endpoint: endpoint.clone(),
                    model: model.clone(),
                    max_tokens: *max_tokens,
                    timeout: Duration::from_millis(*timeout_ms),
                }
            }
            GeneratorBackend::Scripted { sequences } => {
                let queries = sequences
                    .get(question_id)
                    .or_else(|| sequences.get("*"))
                    .ok_or_else(|| GenerationError::MissingScript {
                        question_id: question_id.to_string(),
                    })?;
                if queries.is_empty() {
                    return Err(GenerationError::EmptyScript { question_id: question_id.to_string() });
                }
                RunBackend::Scripted { queries: queries.clone(), cursor: 0 }
            }
            GeneratorBackend::Stochastic { p0, gamma } => {
                RunBackend::Stochastic { p0: *p0, gamma: *gamma }
            }
        };
        Ok(RunGenerator { backend, temperature: self.temperature })
    }
}

/// Per-run generator state instantiated from a [`GeneratorConfig`].
#[derive(Debug)]
pub struct RunGenerator {
    backend: RunBackend,
    temperature: f64,
}

#[derive(Debug)]
enum RunBackend {
    Remote { endpoint: String, model: String, max_tokens: u32, timeout: Duration },
    Scripted { queries: Vec<String>, cursor: usize },
    Stochastic { p0: f64, gamma: f64 },
}

impl RunGenerator {
    /// Sample the next query. `Ok(None)` means the backend answered but no
    /// query could be extracted; the strategy layer executes the empty query
    /// and lets it fail. `Err` is a generation abort (transport trouble), a
    /// different thing from an execution failure.
    pub fn generate(
        &mut self,
        context: &ReflectionContext,
        include_reflection: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Option<String>, GenerationError> {
        match &mut self.backend {
            RunBackend::Remote { endpoint, model, max_tokens, timeout } => {
                let prompt = build_prompt(context, include_reflection);
                let text = request_completion(endpoint, model, *max_tokens, *timeout, self.temperature, &prompt)?;
                Ok(extract_query(&text))
            }
            RunBackend::Scripted { queries, cursor } => {
                let index = (*cursor).min(queries.len() - 1);
                *cursor += 1;
                Ok(Some(queries[index].clone()))
            }
            RunBackend::Stochastic { p0, gamma } => {
                let p = stochastic_failure_probability(*p0, *gamma, context.failures().len());
                let draw: f64 = rng.gen();
                let query = if draw < p {
                    invalid_template(&context.schema)
                } else {
                    valid_template(&context.schema)
                };
                Ok(Some(query))
            }
        }
    }
}

/// Per-attempt invalid-query probability of the stochastic backend:
/// `p0 * gamma^k` clamped to [0, 1], with `k` the number of recorded failures.
pub fn stochastic_failure_probability(p0: f64, gamma: f64, observed_failures: usize) -> f64 {
    (p0 * gamma.powi(observed_failures as i32)).clamp(0.0, 1.0)
}

/// Schema-valid template emitted by the stochastic backend.
pub fn valid_template(schema: &GraphSchema) -> String {
    match schema.label_names().next() {
        Some(label) => format!("MATCH (n:{label}) RETURN n"),
        None => "RETURN 1".to_string(),
    }
}

/// Deliberately invalid template: references a label the schema does not
/// define, which the embedded executor reports as `UnknownLabel`.
pub fn invalid_template(schema: &GraphSchema) -> String {
    let base = schema.label_names().next().unwrap_or("Node");
    let mut label = format!("{base}_missing");
    while schema.label_properties(&label).is_some() {
        label.push('_');
    }
    format!("MATCH (n:{label}) RETURN n")
}

fn completion_agent() -> &'static ureq::Agent {
    static AGENT: OnceLock<ureq::Agent> = OnceLock::new();
    AGENT.get_or_init(|| {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build();
        ureq::Agent::new_with_config(config)
    })
}

/// `POST {endpoint}/generate` with `{model, prompt, temperature, max_tokens}`;
/// the response carries the completion under `text`.
fn request_completion(
    endpoint: &str,
    model: &str,
    max_tokens: u32,
    timeout: Duration,
    temperature: f64,
    prompt: &str,
) -> Result<String, GenerationError> {
    let url = format!("{}/generate", endpoint.trim_end_matches('/'));
    let body = json!({
        "model": model,
        "prompt": prompt,
        "temperature": temperature,
        "max_tokens": max_tokens,
    });
    let mut response = completion_agent()
        .post(&url)
        .config()
        .timeout_global(Some(timeout))
        .build()
        .send_json(&body)
        .map_err(|err| GenerationError::Transport { detail: format!("{url}: {err}") })?;
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(GenerationError::Endpoint { status, detail: url });
    }
    let parsed: Value = response
        .body_mut()
        .read_json()
        .map_err(|err| GenerationError::MalformedResponse { detail: err.to_string() })?;
    parsed
        .get("text")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GenerationError::MalformedResponse {
            detail: "completion response lacks a `text` field".to_string(),
        })
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("completion transport failure: {detail}")]
    Transport { detail: String },
    #[error("completion endpoint returned HTTP {status} ({detail})")]
    Endpoint { status: u16, detail: String },
    #[error("completion response is malformed: {detail}")]
    MalformedResponse { detail: String },
    #[error("scripted backend has no sequence for question `{question_id}` and no `*` fallback")]
    MissingScript { question_id: String },
    #[error("scripted sequence for question `{question_id}` is empty")]
    EmptyScript { question_id: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MessageClass, MessageSource};
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schema() -> Arc<GraphSchema> {
        Arc::new(
            GraphSchema::from_json_str(
                r#"{
                    "dataset_id": "test",
                    "labels": {"Person": {"name": "string"}, "City": {"name": "string"}},
                    "relationships": {"KNOWS": {"pairs": [["Person", "Person"]], "properties": {}}}
                }"#,
            )
            .unwrap(),
        )
    }

    fn failure(query: &str, detail: &str) -> Failure {
        Failure {
            query: query.to_string(),
            message: ExecutionMessage::new(MessageClass::UnknownLabel, detail, MessageSource::Embedded),
        }
    }

    #[test]
    fn prompt_without_failures_has_no_reflection_blocks() {
        let ctx = ReflectionContext::new("Who knows whom?", schema());
        let prompt = build_prompt(&ctx, true);
        assert!(!prompt.contains(CORRECTIVE_INSTRUCTION));
        assert!(prompt.contains("Who knows whom?"));
        assert!(prompt.contains("Person {name: string}"), "schema is injected");
    }

    #[test]
    fn prompt_blocks_are_chronological_and_counted() {
        let ctx = ReflectionContext::new("q", schema())
            .appended(failure("MATCH (a:Bad1) RETURN a", "first"))
            .appended(failure("MATCH (a:Bad2) RETURN a", "second"));
        let prompt = build_prompt(&ctx, true);
        assert_eq!(prompt.matches(CORRECTIVE_INSTRUCTION).count(), 2);
        let first = prompt.find("Bad1").unwrap();
        let second = prompt.find("Bad2").unwrap();
        assert!(first < second);
    }

    #[test]
    fn reflection_disabled_hides_failures() {
        let ctx = ReflectionContext::new("q", schema()).appended(failure("bad", "detail"));
        let prompt = build_prompt(&ctx, false);
        assert!(!prompt.contains(CORRECTIVE_INSTRUCTION));
        assert_eq!(prompt, build_prompt(&ReflectionContext::new("q", schema()), false));
    }

    #[test]
    fn prompt_is_deterministic() {
        let make = || {
            ReflectionContext::new("q", schema()).appended(failure("bad", "detail"))
        };
        assert_eq!(build_prompt(&make(), true), build_prompt(&make(), true));
    }

    #[test]
    fn extraction_fixture_corpus() {
        let cases: Vec<(&str, Option<&str>)> = vec![
            ("```cypher\nMATCH (n) RETURN n\n```", Some("MATCH (n) RETURN n")),
            ("```\nMATCH (n) RETURN n;\n```", Some("MATCH (n) RETURN n")),
            (
                "Here is the query: MATCH (n) RETURN n. Hope it helps.",
                Some("MATCH (n) RETURN n"),
            ),
            ("I cannot answer.", None),
            ("", None),
            ("```cypher\n\n```", None),
            // Prose after a blank line is dropped; inner newlines survive.
            (
                "MATCH (n:Person)\nRETURN n.name\n\nThis query lists people.",
                Some("MATCH (n:Person)\nRETURN n.name"),
            ),
            // Semicolons end the statement.
            ("MATCH (n) RETURN n; MATCH (m) RETURN m", Some("MATCH (n) RETURN n")),
            // Periods inside string literals do not end the query.
            (
                "MATCH (p {name: \"St. Mary\"}) RETURN p. Done.",
                Some("MATCH (p {name: \"St. Mary\"}) RETURN p"),
            ),
            // First fenced block wins over later ones.
            (
                "```\nMATCH (a) RETURN a\n```\ntext\n```\nMATCH (b) RETURN b\n```",
                Some("MATCH (a) RETURN a"),
            ),
            // Keyword must be a whole word: "mismatched" does not start a query.
            ("The mismatched parens... RETURN 1", Some("RETURN 1")),
            ("with great power", Some("with great power")),
        ];
        for (raw, expected) in cases {
            assert_eq!(extract_query(raw).as_deref(), expected, "raw: {raw:?}");
        }
    }

    #[test]
    fn scripted_replays_in_order_and_ignores_context() {
        let config = GeneratorConfig::scripted_single(vec!["bad".into(), "good".into()]);
        let mut generator = config.instantiate("any").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ctx = ReflectionContext::new("q", schema());
        assert_eq!(generator.generate(&ctx, false, &mut rng).unwrap().unwrap(), "bad");
        // Context now records a failure, scripted output is unaffected.
        let ctx = ctx.appended(failure("bad", "boom"));
        assert_eq!(generator.generate(&ctx, true, &mut rng).unwrap().unwrap(), "good");
        // Exhausted scripts repeat the last entry.
        assert_eq!(generator.generate(&ctx, true, &mut rng).unwrap().unwrap(), "good");
    }

    #[test]
    fn scripted_prefers_exact_question_id() {
        let sequences = BTreeMap::from([
            ("q1".to_string(), vec!["one".to_string()]),
            ("*".to_string(), vec!["star".to_string()]),
        ]);
        let config = GeneratorConfig {
            backend: GeneratorBackend::Scripted { sequences },
            temperature: default_temperature(),
        };
        let ctx = ReflectionContext::new("q", schema());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g1 = config.instantiate("q1").unwrap();
        assert_eq!(g1.generate(&ctx, false, &mut rng).unwrap().unwrap(), "one");
        let mut g2 = config.instantiate("other").unwrap();
        assert_eq!(g2.generate(&ctx, false, &mut rng).unwrap().unwrap(), "star");
    }

    #[test]
    fn scripted_missing_sequence_is_an_error() {
        let sequences = BTreeMap::from([("q1".to_string(), vec!["one".to_string()])]);
        let config = GeneratorConfig {
            backend: GeneratorBackend::Scripted { sequences },
            temperature: default_temperature(),
        };
        assert!(matches!(
            config.instantiate("other").unwrap_err(),
            GenerationError::MissingScript { .. }
        ));
    }

    // Forced rng draws pin the decision threshold exactly: p0 = 0.5 with an
    // empty context fails on u = 0 and succeeds on u just below 1.
    #[test]
    fn stochastic_threshold_via_forced_draws() {
        let config = GeneratorConfig::stochastic(0.5, 0.5);
        let ctx = ReflectionContext::new("q", schema());

        let mut low = StepRng::new(0, 0); // u = 0.0
        let mut generator = config.instantiate("q").unwrap();
        let query = generator.generate(&ctx, false, &mut low).unwrap().unwrap();
        assert!(query.contains("_missing"), "u=0 < p must produce the invalid template");

        let mut high = StepRng::new(u64::MAX, 0); // u just below 1.0
        let query = generator.generate(&ctx, false, &mut high).unwrap().unwrap();
        assert!(!query.contains("_missing"), "u~1 >= p must produce the valid template");

        // One recorded failure halves the threshold to 0.25; u = 0.5 is above it.
        let ctx = ctx.appended(failure("bad", "x"));
        let mut mid = StepRng::new(u64::MAX / 2 + 1, 0); // u ~ 0.5
        let query = generator.generate(&ctx, true, &mut mid).unwrap().unwrap();
        assert!(!query.contains("_missing"));
    }

    #[test]
    fn stochastic_probability_formula_is_exact() {
        assert_eq!(stochastic_failure_probability(0.4, 0.5, 0), 0.4);
        assert_eq!(stochastic_failure_probability(0.4, 0.5, 2), 0.4 * 0.25);
        assert_eq!(stochastic_failure_probability(0.5, 0.5, 1), 0.25);
        assert_eq!(stochastic_failure_probability(1.0, 1.0, 10), 1.0);
    }

    // Long-run frequency oracle: a million draws with gamma = 1 stay within
    // +/-0.002 of p0 = 0.4.
    #[test]
    fn stochastic_long_run_frequency() {
        let config = GeneratorConfig::stochastic(0.4, 1.0);
        let ctx = ReflectionContext::new("q", schema());
        let mut generator = config.instantiate("q").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20240191);
        let draws = 1_000_000u32;
        let mut invalid = 0u32;
        for _ in 0..draws {
            let query = generator.generate(&ctx, false, &mut rng).unwrap().unwrap();
            if query.contains("_missing") {
                invalid += 1;
            }
        }
        let frequency = invalid as f64 / draws as f64;
        assert!(
            (frequency - 0.4).abs() <= 0.002,
            "long-run invalid frequency {frequency} departs from 0.4"
        );
    }

    #[test]
    fn templates_match_schema_expectations() {
        let schema = schema();
        assert_eq!(valid_template(&schema), "MATCH (n:City) RETURN n");
        let invalid = invalid_template(&schema);
        assert!(invalid.contains("City_missing"));
    }

    #[test]
    fn config_check_catches_bad_parameters() {
        let bad = GeneratorConfig::stochastic(1.5, 0.0);
        let problems = bad.check();
        assert_eq!(problems.len(), 2, "{problems:?}");
        assert!(GeneratorConfig::stochastic(0.4, 1.0).check().is_empty());
    }

    #[test]
    fn generator_config_serde_shape() {
        let json = r#"{"type": "stochastic", "p0": 0.4, "gamma": 0.5}"#;
        let config: GeneratorConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.temperature, 0.9, "temperature defaults to 0.9");
        assert_eq!(config.backend, GeneratorBackend::Stochastic { p0: 0.4, gamma: 0.5 });
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_failures() -> impl Strategy<Value = Vec<(String, String)>> {
            prop::collection::vec(("[a-z]{1,8}", "[a-z ]{1,12}"), 0..5)
        }

        proptest! {
            // Distinct failure lists produce distinct prompts, and the block
            // count always equals the failure count.
            #[test]
            fn prompt_injective_and_linear(a in arb_failures(), b in arb_failures()) {
                let build = |failures: &[(String, String)]| {
                    let mut ctx = ReflectionContext::new("q", schema());
                    for (query, detail) in failures {
                        ctx = ctx.appended(failure(query, detail));
                    }
                    build_prompt(&ctx, true)
                };
                let prompt_a = build(&a);
                let prompt_b = build(&b);
                prop_assert_eq!(
                    prompt_a.matches(CORRECTIVE_INSTRUCTION).count(),
                    a.len()
                );
                if a != b {
                    prop_assert_ne!(prompt_a, prompt_b);
                } else {
                    prop_assert_eq!(prompt_a, prompt_b);
                }
            }
        }
    }
}
