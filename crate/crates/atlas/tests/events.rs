mod common;

use std::time::Duration;

use atlas::service::{router, Shared};
use axum::http::StatusCode;
use common::*;
use futures_util::StreamExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

async fn start(state: Shared) -> std::net::SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    addr
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn connect(addr: std::net::SocketAddr, session: &str) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/sessions/{session}/events")).await.unwrap();
    ws
}

/// Reads events until `done`.
async fn until_done(ws: &mut Ws) -> Vec<Value> {
    let mut out = Vec::new();
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("event within 5 s").unwrap().unwrap();
        if let Message::Text(t) = msg {
            let v: Value = serde_json::from_str(&t).unwrap();
            assert_valid("Event", &v);
            let done = v["stage"] == "done";
            out.push(v);
            if done {
                return out;
            }
        }
    }
}

fn stages(events: &[Value]) -> Vec<&str> {
    events.iter().map(|e| e["stage"].as_str().unwrap()).collect()
}

#[tokio::test(flavor = "multi_thread")]
async fn stage_order_ends_with_done() {
    let state = fixture_state();
    let addr = start(state.clone()).await;
    let id = new_session(&state).await;
    let mut ws = connect(addr, &id).await;
    let (status, a) = ask(&state, &id, json!({ "question": CASE_QUESTION })).await;
    assert_eq!(status, StatusCode::OK);
    let events = until_done(&mut ws).await;
    assert_eq!(stages(&events), ["screened", "enriched", "retrieved", "narrated", "extracted", "grounded", "done"]);
    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (1..=7).collect::<Vec<_>>());
    assert_eq!(events[6]["answer_id"], a["answer_id"]);
    assert_eq!(events[0]["allowed"], true);
}

#[tokio::test(flavor = "multi_thread")]
async fn refused_query_emits_screened_then_done() {
    let state = fixture_state();
    let addr = start(state.clone()).await;
    let id = new_session(&state).await;
    let mut ws = connect(addr, &id).await;
    let (status, _) = ask(&state, &id, json!({ "question": "Which driver looks like an immigrant?" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let events = until_done(&mut ws).await;
    assert_eq!(stages(&events), ["screened", "done"]);
    assert_eq!(events[0]["allowed"], false);
    assert!(events[0]["reason"].is_string());
    assert!(events[1].get("answer_id").is_none());
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_do_not_see_each_others_events() {
    let state = fixture_state();
    let addr = start(state.clone()).await;
    let (a, b) = (new_session(&state).await, new_session(&state).await);
    let mut wa = connect(addr, &a).await;
    let mut wb = connect(addr, &b).await;
    ask(&state, &b, json!({ "question": CASE_QUESTION })).await;
    let events = until_done(&mut wb).await;
    assert!(events.iter().all(|e| e["session_id"] == b.as_str()));
    assert!(tokio::time::timeout(Duration::from_millis(200), wa.next()).await.is_err());
}

#[tokio::test(flavor = "multi_thread")]
async fn disconnect_does_not_lose_the_answer() {
    let state = fixture_state();
    let addr = start(state.clone()).await;
    let id = new_session(&state).await;
    let mut ws = connect(addr, &id).await;
    ws.close(None).await.unwrap();
    drop(ws);
    let (status, a) = ask(&state, &id, json!({ "question": CASE_QUESTION })).await;
    assert_eq!(status, StatusCode::OK);
    let (status, again) = call(&state, axum::http::Method::GET, &format!("/api/answers/{}", a["answer_id"].as_str().unwrap()), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["narrative"], a["narrative"]);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_session_is_rejected() {
    let state = fixture_state();
    let addr = start(state).await;
    let err = tokio_tungstenite::connect_async(format!("ws://{addr}/api/sessions/missing/events")).await.unwrap_err();
    match err {
        tokio_tungstenite::tungstenite::Error::Http(resp) => assert_eq!(resp.status(), 404),
        other => panic!("unexpected {other:?}"),
    }
}
