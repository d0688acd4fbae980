#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use atlas::fixture::fixture_corpus;
use atlas::service::{router, AppState, Shared};
use atlas_core::pipeline::PipelineConfig;
use atlas_core::{Gateway, Taxonomy};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use serde_json::Value;
use tower::ServiceExt;

pub const SCHEMA: &str = include_str!("../../schemas/api.schema.json");

pub fn fixture_state() -> Shared {
    let t = Taxonomy::default();
    let g = Gateway::mock(&t);
    let corpus = fixture_corpus(&t, &g).unwrap();
    Arc::new(AppState::new(t, g, corpus, PipelineConfig::default()))
}

fn schema_doc() -> &'static Value {
    static DOC: OnceLock<Value> = OnceLock::new();
    DOC.get_or_init(|| serde_json::from_str(SCHEMA).unwrap())
}

/// Panics with every violation when `doc` does not match `#/$defs/{name}`.
pub fn assert_valid(name: &str, doc: &Value) {
    let mut schema = schema_doc().clone();
    schema["$ref"] = Value::String(format!("#/$defs/{name}"));
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name} violates schema: {errors:#?}\n{doc:#}");
}

pub async fn call(state: &Shared, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into())) };
    (status, v)
}

pub async fn new_session(state: &Shared) -> String {
    let (s, v) = call(state, Method::POST, "/api/sessions", None).await;
    assert_eq!(s, StatusCode::CREATED);
    v["session_id"].as_str().unwrap().to_string()
}

pub async fn ask(state: &Shared, session: &str, body: Value) -> (StatusCode, Value) {
    call(state, Method::POST, &format!("/api/sessions/{session}/query"), Some(body)).await
}

pub const CASE_QUESTION: &str = "Which vehicle approaches the cyclist?";
