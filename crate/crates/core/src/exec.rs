//! Executor abstraction: run a query against a target and obtain a
//! `(result, message)` outcome.
//!
//! Two targets exist. The embedded target tokenizes, parses and validates
//! against a loaded schema — fully deterministic, no I/O — and returns an
//! empty row set on success (the harness measures executability, not data).
//! The remote target forwards the query to an HTTP proxy in front of a live
//! graph database and maps the response onto the same outcome space.

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde_json::{json, Value};

use crate::cypher::{parse_source, validate};
use crate::model::{
    ExecutionMessage, ExecutionOutcome, MessageClass, MessageSource, Scalar,
};
use crate::schema::GraphSchema;

/// Remote proxy endpoint configuration.
///
/// The proxy contract: `POST {endpoint}/execute` with
/// `{"query": ..., "database": ...}`; success responses carry
/// `{"rows": [[...]]}`, failures `{"error": {"code": ..., "message": ...}}`.
/// When `auth_token` is set it is sent as a bearer token.
#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    pub endpoint: String,
    pub database: String,
    pub timeout: Duration,
    pub auth_token: Option<String>,
}

/// Where a query is executed.
#[derive(Debug, Clone)]
pub enum ExecutorTarget {
    Embedded(Arc<GraphSchema>),
    Remote(RemoteEndpoint),
}

/// Execute `query` against `target`.
///
/// Never fails as a function: every problem, including unreachable remote
/// endpoints, is expressed as an error-class message in the outcome. Remote
/// calls are bounded by the endpoint's timeout.
pub fn execute(query: &str, target: &ExecutorTarget) -> ExecutionOutcome {
    match target {
        ExecutorTarget::Embedded(schema) => execute_embedded(query, schema),
        ExecutorTarget::Remote(endpoint) => execute_remote(query, endpoint),
    }
}

fn execute_embedded(query: &str, schema: &GraphSchema) -> ExecutionOutcome {
    let ast = match parse_source(query) {
        Ok(ast) => ast,
        Err(diag) => return ExecutionOutcome::failure(diag.to_message(MessageSource::Embedded)),
    };
    let diags = validate(&ast, schema);
    match diags.split_first() {
        None => ExecutionOutcome::success(Vec::new(), ExecutionMessage::success(MessageSource::Embedded)),
        Some((first, rest)) => {
            // First diagnostic decides the class; the rest ride along in the
            // detail so reflection prompts see the full picture.
            let mut message = first.to_message(MessageSource::Embedded);
            if !rest.is_empty() {
                let extras = rest
                    .iter()
                    .map(|d| format!("{}: {}", d.class, d.detail))
                    .collect::<Vec<_>>()
                    .join("; ");
                message.detail = format!("{}; also: {extras}", message.detail);
            }
            ExecutionOutcome::failure(message)
        }
    }
}

fn shared_agent() -> &'static ureq::Agent {
    static AGENT: OnceLock<ureq::Agent> = OnceLock::new();
    AGENT.get_or_init(|| {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build();
        ureq::Agent::new_with_config(config)
    })
}

fn execute_remote(query: &str, endpoint: &RemoteEndpoint) -> ExecutionOutcome {
    let url = format!("{}/execute", endpoint.endpoint.trim_end_matches('/'));
    let body = json!({ "query": query, "database": endpoint.database });

    let mut request = shared_agent()
        .post(&url)
        .config()
        .timeout_global(Some(endpoint.timeout))
        .build();
    if let Some(token) = &endpoint.auth_token {
        request = request.header("Authorization", format!("Bearer {token}"));
    }

    let mut response = match request.send_json(&body) {
        Ok(response) => response,
        Err(err) => {
            return ExecutionOutcome::failure(ExecutionMessage::new(
                MessageClass::TransportError,
                format!("request to {url} failed: {err}"),
                MessageSource::Remote,
            ));
        }
    };

    let status = response.status().as_u16();
    let parsed: Option<Value> = response.body_mut().read_json().ok();
    let message = classify_remote_response(status, parsed.as_ref());
    if message.is_error() {
        ExecutionOutcome::failure(message)
    } else {
        let rows = parsed.as_ref().map(extract_rows).unwrap_or_default();
        ExecutionOutcome::success(rows, message)
    }
}

/// Map a proxy response onto an execution message.
///
/// 2xx with a `rows` array is success. A parseable `error.code`/`error.message`
/// document on a 2xx or 4xx response is mapped through a fixed keyword table;
/// anything unmappable falls back to `SyntaxError` with the original text in
/// the detail. Missing or malformed bodies and 5xx responses are transport
/// errors: they describe the infrastructure, not the query.
pub fn classify_remote_response(status: u16, body: Option<&Value>) -> ExecutionMessage {
    let Some(body) = body else {
        return ExecutionMessage::new(
            MessageClass::TransportError,
            format!("response body missing or not valid JSON (HTTP {status})"),
            MessageSource::Remote,
        );
    };

    let ok_status = (200..300).contains(&status);
    if ok_status && body.get("rows").is_some_and(Value::is_array) {
        return ExecutionMessage::success(MessageSource::Remote);
    }

    let error_doc = body.get("error");
    let classifiable = ok_status || (400..500).contains(&status);
    if let (true, Some(error)) = (classifiable, error_doc) {
        let code = error.get("code").and_then(Value::as_str).unwrap_or("");
        let text = error.get("message").and_then(Value::as_str).unwrap_or("");
        let class = classify_error_keywords(&format!("{code} {text}").to_ascii_lowercase());
        return ExecutionMessage::new(
            class,
            format!("remote error {code}: {text}"),
            MessageSource::Remote,
        );
    }

    ExecutionMessage::new(
        MessageClass::TransportError,
        format!("unexpected proxy response (HTTP {status}): {body}"),
        MessageSource::Remote,
    )
}

/// Fixed keyword table from proxy error text to message class. Checked in
/// order; the first hit wins, and text matching nothing is treated as a
/// generic syntax failure.
fn classify_error_keywords(haystack: &str) -> MessageClass {
    const TABLE: [(&str, MessageClass); 6] = [
        ("syntax", MessageClass::SyntaxError),
        ("label", MessageClass::UnknownLabel),
        ("relationship", MessageClass::UnknownRelationshipType),
        ("propert", MessageClass::UnknownProperty),
        ("path", MessageClass::MalformedPath),
        ("direction", MessageClass::DirectionViolation),
    ];
    for (needle, class) in TABLE {
        if haystack.contains(needle) {
            return class;
        }
    }
    MessageClass::SyntaxError
}

fn extract_rows(body: &Value) -> Vec<Vec<Scalar>> {
    let Some(rows) = body.get("rows").and_then(Value::as_array) else {
        return Vec::new();
    };
    rows.iter()
        .map(|row| match row {
            Value::Array(cells) => cells.iter().map(value_to_scalar).collect(),
            other => vec![value_to_scalar(other)],
        })
        .collect()
}

fn value_to_scalar(value: &Value) -> Scalar {
    match value {
        Value::Null => Scalar::Null,
        Value::Bool(b) => Scalar::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Scalar::Int(i),
            None => Scalar::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => Scalar::Text(s.clone()),
        // Nested structures are kept as their JSON text; the harness never
        // inspects row contents.
        other => Scalar::Text(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn embedded_success_returns_empty_rows() {
        let target = ExecutorTarget::Embedded(schema());
        let outcome = execute("MATCH (p:Person) RETURN p.name", &target);
        assert_eq!(outcome.message().class, MessageClass::Success);
        assert_eq!(outcome.result(), Some(&[][..]));
    }

    #[test]
    fn embedded_unknown_label_has_no_result() {
        let target = ExecutorTarget::Embedded(schema());
        let outcome = execute("MATCH (p:Persn) RETURN p", &target);
        assert_eq!(outcome.message().class, MessageClass::UnknownLabel);
        assert!(outcome.result().is_none());
    }

    #[test]
    fn embedded_empty_query_is_syntax_error() {
        let target = ExecutorTarget::Embedded(schema());
        let outcome = execute("", &target);
        assert_eq!(outcome.message().class, MessageClass::SyntaxError);
    }

    #[test]
    fn embedded_agrees_with_validator_and_is_deterministic() {
        let schema = schema();
        let target = ExecutorTarget::Embedded(schema.clone());
        let queries = [
            "MATCH (p:Person) RETURN p.name",
            "MATCH (p:Persn) RETURN p",
            "MATCH (p:Person)-[:NOPE]->(q:Person) RETURN p.name",
            "MATCH (p:Person RETURN p",
            "MATCH (a)-[:KNOWS]->()<-->(b) RETURN a",
        ];
        for query in queries {
            let first = execute(query, &target);
            let second = execute(query, &target);
            assert_eq!(first, second, "executor must be deterministic for `{query}`");

            let expected = match parse_source(query) {
                Err(diag) => MessageClass::from(diag.class),
                Ok(ast) => validate(&ast, &schema)
                    .first()
                    .map(|d| MessageClass::from(d.class))
                    .unwrap_or(MessageClass::Success),
            };
            assert_eq!(first.message().class, expected, "query `{query}`");
        }
    }

    #[test]
    fn embedded_detail_retains_secondary_diagnostics() {
        let target = ExecutorTarget::Embedded(schema());
        let outcome = execute("MATCH (p:Persn)-[:NOPE]->(q:Person) RETURN q.name", &target);
        assert_eq!(outcome.message().class, MessageClass::UnknownLabel);
        assert!(outcome.message().detail.contains("also:"), "{}", outcome.message().detail);
        assert!(outcome.message().detail.contains("NOPE"));
    }

    #[test]
    fn remote_unreachable_is_transport_error() {
        // Nothing listens on this port; the connection is refused immediately.
        let target = ExecutorTarget::Remote(RemoteEndpoint {
            endpoint: "http://127.0.0.1:9".to_string(),
            database: "test".to_string(),
            timeout: Duration::from_millis(300),
            auth_token: None,
        });
        let outcome = execute("MATCH (p:Person) RETURN p.name", &target);
        assert_eq!(outcome.message().class, MessageClass::TransportError);
        assert_eq!(outcome.message().source, MessageSource::Remote);
        assert!(outcome.result().is_none());
    }

    // The remote classification fixture: one row per contract case.
    #[test]
    fn classify_remote_response_fixture_table() {
        use MessageClass::*;
        let cases: Vec<(u16, Option<Value>, MessageClass)> = vec![
            (200, Some(json!({"rows": []})), Success),
            (200, Some(json!({"rows": [[1, "a"]]})), Success),
            (
                400,
                Some(json!({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "bad"}})),
                SyntaxError,
            ),
            (
                400,
                Some(json!({"error": {"code": "Neo.ClientError.Statement.UnknownLabel", "message": "no such label"}})),
                UnknownLabel,
            ),
            (
                400,
                Some(json!({"error": {"code": "X", "message": "invalid relationship type"}})),
                UnknownRelationshipType,
            ),
            (
                422,
                Some(json!({"error": {"code": "X", "message": "no such property on node"}})),
                UnknownProperty,
            ),
            (
                400,
                Some(json!({"error": {"code": "X", "message": "malformed path expression"}})),
                MalformedPath,
            ),
            (
                400,
                Some(json!({"error": {"code": "X", "message": "traversal direction is wrong"}})),
                DirectionViolation,
            ),
            // First keyword hit wins when several match.
            (
                400,
                Some(json!({"error": {"code": "X", "message": "relationship direction is wrong"}})),
                UnknownRelationshipType,
            ),
            // Unmappable error text falls back to SyntaxError.
            (400, Some(json!({"error": {"code": "Weird.Code", "message": "???"}})), SyntaxError),
            // 2xx responses may still carry an engine error document.
            (
                200,
                Some(json!({"error": {"code": "Neo.ClientError.Statement.SyntaxError", "message": "x"}})),
                SyntaxError,
            ),
            (500, None, TransportError),
            (500, Some(json!({"error": {"code": "Neo.Server.Internal", "message": "boom"}})), TransportError),
            (200, Some(json!({"unexpected": true})), TransportError),
            // A 2xx body without rows or error is malformed, hence transport.
            (204, Some(json!({})), TransportError),
        ];

        for (status, body, expected) in &cases {
            let message = classify_remote_response(*status, body.as_ref());
            assert_eq!(&message.class, expected, "status {status}, body {body:?}");
            assert_eq!(message.source, MessageSource::Remote);
        }
    }

    #[test]
    fn unmappable_detail_keeps_original_text() {
        let body = json!({"error": {"code": "Weird.Code", "message": "something odd"}});
        let message = classify_remote_response(400, Some(&body));
        assert!(message.detail.contains("Weird.Code"));
        assert!(message.detail.contains("something odd"));
    }
}
