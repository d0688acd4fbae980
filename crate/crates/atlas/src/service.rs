//! HTTP and WebSocket API.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/health` | liveness and corpus size |
//! | GET | `/api/taxonomy` | taxonomy document with category colors |
//! | POST | `/api/sessions` | new session |
//! | POST | `/api/sessions/{id}/query` | answer a question |
//! | GET | `/api/sessions/{id}/events` | WebSocket stage events |
//! | GET | `/api/answers/{id}` | stored answer |
//! | GET | `/api/answers/{id}/graph` | answer graph |
//! | GET | `/api/answers/{id}/graph/{node}/neighborhood?radius=` | subgraph, radius 1 by default |
//! | GET | `/api/clips/{video}/{index}/overlays?answer=` | boxes and masks for one related clip |
//! | GET | `/api/videos/{video}/media` | source video, honoring `Range` |
//! | POST | `/api/admin/ingest/{kind}` | ingest a videos, captions, detections or masks file |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use atlas_core::graph::KnowledgeGraph;
use atlas_core::grounding::{active_masks, TrackSample};
use atlas_core::pipeline::{related_for_timeline, PipelineConfig, StageTag, TimelineEntry};
use atlas_core::{AugmentedAnswer, CorpusStore, Gateway, Pipeline, PipelineError, QuerySession, Stage, Taxonomy};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::ingest::{ingest_captions, ingest_detections, ingest_masks, ingest_videos, IngestError, IngestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    Refused,
    NotFound,
    BackendFailure,
    BadRequest,
    Conflict,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::Refused => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::BackendFailure => StatusCode::BAD_GATEWAY,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Conflict => StatusCode::CONFLICT,
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Refused => 2,
            ErrorCode::NotFound => 3,
            ErrorCode::BackendFailure => 4,
            ErrorCode::BadRequest => 5,
            ErrorCode::Conflict => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<StageTag>,
    /// Screening reason; always present on refusals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), stage: None, reason: None }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::NotFound, what)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match e {
            PipelineError::Refused { reason } => ApiError { code: ErrorCode::Refused, message, stage: Some(StageTag::Screened), reason: Some(reason) },
            PipelineError::EmptyCorpus => ApiError::new(ErrorCode::Conflict, message),
            PipelineError::EmptySession | PipelineError::BadK | PipelineError::ScoreOutOfRange(_) => ApiError::new(ErrorCode::BadRequest, message),
            PipelineError::Backend { stage, .. } => ApiError { stage: Some(stage), ..ApiError::new(ErrorCode::BackendFailure, message) },
            PipelineError::Graph(_) => ApiError { stage: Some(StageTag::Extracted), ..ApiError::new(ErrorCode::BackendFailure, message) },
            PipelineError::Grounding(_) | PipelineError::Invalid(_) => {
                ApiError { stage: Some(StageTag::Grounded), ..ApiError::new(ErrorCode::BackendFailure, message) }
            }
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        ApiError::new(ErrorCode::BadRequest, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

/// Stage event as pushed over the WebSocket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDoc {
    pub session_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub stage: Stage,
}

/// Answer body returned by the query endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDoc {
    pub session_id: String,
    #[serde(flatten)]
    pub answer: AugmentedAnswer,
    pub timeline: Vec<TimelineEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSeries {
    pub node_id: String,
    pub track_id: String,
    pub label: String,
    pub color: String,
    pub samples: Vec<TrackSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskOverlay {
    pub class_id: String,
    pub color: String,
    pub node_ids: Vec<String>,
    pub geometry: Vec<Vec<[f64; 2]>>,
    pub reference_frame: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayDoc {
    pub answer_id: String,
    pub video_id: String,
    pub clip_index: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub first_frame: u64,
    pub last_frame: u64,
    pub series: Vec<BoxSeries>,
    pub masks: Vec<MaskOverlay>,
}

struct SessionSlot {
    session: Arc<Mutex<QuerySession>>,
    events: broadcast::Sender<EventDoc>,
}

pub struct AppState {
    pub taxonomy: Taxonomy,
    pub gateway: Gateway,
    pub corpus: RwLock<CorpusStore>,
    pub config: PipelineConfig,
    pub media_dir: Option<PathBuf>,
    sessions: Mutex<HashMap<String, SessionSlot>>,
    answers: RwLock<HashMap<String, AugmentedAnswer>>,
}

pub type Shared = Arc<AppState>;

impl AppState {
    pub fn new(taxonomy: Taxonomy, gateway: Gateway, corpus: CorpusStore, config: PipelineConfig) -> Self {
        AppState {
            taxonomy,
            gateway,
            corpus: RwLock::new(corpus),
            config,
            media_dir: None,
            sessions: Mutex::new(HashMap::new()),
            answers: RwLock::new(HashMap::new()),
        }
    }

    pub fn create_session(&self) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (events, _) = broadcast::channel(256);
        let slot = SessionSlot { session: Arc::new(Mutex::new(QuerySession::new(id.clone()))), events };
        self.sessions.lock().expect("sessions lock").insert(id.clone(), slot);
        id
    }

    fn slot(&self, id: &str) -> Result<(Arc<Mutex<QuerySession>>, broadcast::Sender<EventDoc>), ApiError> {
        let sessions = self.sessions.lock().expect("sessions lock");
        let slot = sessions.get(id).ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
        Ok((slot.session.clone(), slot.events.clone()))
    }

    pub fn subscribe(&self, id: &str) -> Result<broadcast::Receiver<EventDoc>, ApiError> {
        Ok(self.slot(id)?.1.subscribe())
    }

    /// Runs one query to completion. Queries of one session are serialized;
    /// sessions run in parallel. The answer is stored before returning.
    pub fn ask(&self, session_id: &str, question: &str, k: Option<usize>, follow_up: Option<bool>) -> Result<AnswerDoc, ApiError> {
        let (session, events) = self.slot(session_id)?;
        let mut session = session.lock().expect("session lock");
        let corpus = self.corpus.read().expect("corpus lock");
        let pipeline = Pipeline::new(&self.taxonomy, &self.gateway, &corpus, self.config);
        let mut seq = 0;
        let mut observer = |stage: &Stage| {
            seq += 1;
            // no subscribers is fine
            let _ = events.send(EventDoc { session_id: session_id.to_string(), seq, stage: stage.clone() });
        };
        let follow = follow_up.unwrap_or(!session.turns().is_empty());
        let answer = if follow {
            pipeline.follow_up(&mut session, question, k, &mut observer)?
        } else {
            pipeline.answer_query(&mut session, question, k, &mut observer)?
        };
        self.answers.write().expect("answers lock").insert(answer.answer_id.clone(), answer.clone());
        Ok(AnswerDoc { session_id: session_id.to_string(), timeline: related_for_timeline(&answer), answer })
    }

    pub fn answer(&self, id: &str) -> Result<AugmentedAnswer, ApiError> {
        self.answers.read().expect("answers lock").get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown answer `{id}`")))
    }

    pub fn overlays(&self, video: &str, index: u32, answer_id: &str) -> Result<OverlayDoc, ApiError> {
        let answer = self.answer(answer_id)?;
        let hit = answer
            .related
            .iter()
            .find(|h| h.descriptor.video_id == video && h.descriptor.clip_index == index)
            .ok_or_else(|| ApiError::not_found(format!("clip {video}#{index} is not among the answer's related clips")))?;
        let corpus = self.corpus.read().expect("corpus lock");
        let (first, last) = corpus.clip_frames(&hit.descriptor).ok_or_else(|| ApiError::not_found(format!("unknown video `{video}`")))?;
        let color = |class: &str| self.taxonomy.category_color(class).unwrap_or_default().to_string();

        let series = if video == answer.chosen.video_id {
            answer
                .tracks
                .iter()
                .filter_map(|t| {
                    let node = answer.graph.node(t.node_id.as_deref()?)?;
                    let samples: Vec<TrackSample> = t
                        .samples
                        .iter()
                        .filter(|s| s.frame_index >= first && s.frame_index <= last && s.confidence >= self.config.grounding.confidence_threshold)
                        .cloned()
                        .collect();
                    (!samples.is_empty()).then(|| BoxSeries {
                        node_id: node.node_id.clone(),
                        track_id: t.track_id.clone(),
                        label: node.canonical_label.clone(),
                        color: color(&node.class_id),
                        samples,
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        let masks = active_masks(corpus.masks(video), &answer.graph)
            .into_iter()
            .map(|m| MaskOverlay {
                color: color(&m.class_id),
                node_ids: answer.graph.nodes.iter().filter(|n| n.class_id == m.class_id).map(|n| n.node_id.clone()).collect(),
                class_id: m.class_id,
                geometry: m.geometry,
                reference_frame: m.reference_frame,
            })
            .collect();
        Ok(OverlayDoc {
            answer_id: answer.answer_id.clone(),
            video_id: video.to_string(),
            clip_index: index,
            start_s: hit.descriptor.start.as_secs_f64(),
            end_s: hit.descriptor.end.as_secs_f64(),
            first_frame: first,
            last_frame: last,
            series,
            masks,
        })
    }

    pub fn ingest(&self, kind: &str, body: &str) -> Result<IngestReport, ApiError> {
        let mut corpus = self.corpus.write().expect("corpus lock");
        let report = match kind {
            "videos" => ingest_videos(&mut corpus, body)?,
            "captions" => ingest_captions(&mut corpus, body, &self.gateway)?,
            "detections" => ingest_detections(&mut corpus, body)?,
            "masks" => ingest_masks(&mut corpus, body, &self.taxonomy)?,
            other => return Err(ApiError::not_found(format!("unknown artifact kind `{other}`"))),
        };
        Ok(report)
    }
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/query", post(query))
        .route("/api/sessions/{id}/events", get(events))
        .route("/api/answers/{id}", get(answer))
        .route("/api/answers/{id}/graph", get(graph))
        .route("/api/answers/{id}/graph/{node}/neighborhood", get(neighborhood))
        .route("/api/clips/{video}/{index}/overlays", get(overlays))
        .route("/api/videos/{video}/media", get(media))
        .route("/api/admin/ingest/{kind}", post(admin_ingest))
        .with_state(state)
}

pub async fn serve(state: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(ErrorCode::BackendFailure, format!("worker failed: {e}")))?
}

async fn health(State(s): State<Shared>) -> Json<serde_json::Value> {
    let clips = s.corpus.read().expect("corpus lock").index().len();
    Json(serde_json::json!({ "status": "ok", "clips": clips }))
}

async fn taxonomy(State(s): State<Shared>) -> Json<atlas_core::taxonomy::TaxonomyDocument> {
    Json(s.taxonomy.to_document())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

async fn create_session(State(s): State<Shared>) -> (StatusCode, Json<SessionCreated>) {
    (StatusCode::CREATED, Json(SessionCreated { session_id: s.create_session() }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryBody {
    pub question: String,
    #[serde(default)]
    pub k: Option<usize>,
    /// Defaults to true once the session has a turn.
    #[serde(default)]
    pub follow_up: Option<bool>,
}

async fn query(State(s): State<Shared>, Path(id): Path<String>, Json(body): Json<QueryBody>) -> Result<Json<AnswerDoc>, ApiError> {
    blocking(move || s.ask(&id, &body.question, body.k, body.follow_up)).await.map(Json)
}

async fn events(State(s): State<Shared>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let rx = s.subscribe(&id)?;
    Ok(ws.on_upgrade(move |socket| forward_events(socket, rx)))
}

async fn forward_events(mut socket: WebSocket, mut rx: broadcast::Receiver<EventDoc>) {
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(ev) => {
                    let text = serde_json::to_string(&ev).expect("event serializes");
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => tracing::warn!(skipped = n, "event subscriber lagged"),
                Err(broadcast::error::RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn answer(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<AnswerDoc>, ApiError> {
    let a = s.answer(&id)?;
    let session_id = id.rsplit_once("-a").map(|(s, _)| s.to_string()).unwrap_or_default();
    Ok(Json(AnswerDoc { session_id, timeline: related_for_timeline(&a), answer: a }))
}

async fn graph(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<KnowledgeGraph>, ApiError> {
    Ok(Json(s.answer(&id)?.graph))
}

#[derive(Debug, Deserialize)]
struct RadiusParam {
    radius: Option<usize>,
}

async fn neighborhood(
    State(s): State<Shared>,
    Path((id, node)): Path<(String, String)>,
    Query(p): Query<RadiusParam>,
) -> Result<Json<KnowledgeGraph>, ApiError> {
    let g = s.answer(&id)?.graph;
    g.neighborhood(&node, p.radius.unwrap_or(1)).map(Json).map_err(|e| ApiError::not_found(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct AnswerParam {
    answer: String,
}

async fn overlays(State(s): State<Shared>, Path((video, index)): Path<(String, u32)>, Query(p): Query<AnswerParam>) -> Result<Json<OverlayDoc>, ApiError> {
    s.overlays(&video, index, &p.answer).map(Json)
}

async fn admin_ingest(State(s): State<Shared>, Path(kind): Path<String>, body: String) -> Result<Json<IngestReport>, ApiError> {
    blocking(move || s.ingest(&kind, &body)).await.map(Json)
}

/// Parses a single `bytes=a-b` range against a body of `len` bytes.
pub fn parse_range(value: &str, len: u64) -> Option<(u64, u64)> {
    let spec = value.strip_prefix("bytes=")?;
    if spec.contains(',') || len == 0 {
        return None;
    }
    let (a, b) = spec.split_once('-')?;
    let (start, end) = match (a.trim(), b.trim()) {
        ("", suffix) => {
            let n: u64 = suffix.parse().ok()?;
            (len.saturating_sub(n), len - 1)
        }
        (s, "") => (s.parse().ok()?, len - 1),
        (s, e) => (s.parse().ok()?, e.parse::<u64>().ok()?.min(len - 1)),
    };
    (start <= end && start < len).then_some((start, end))
}

async fn media(State(s): State<Shared>, Path(video): Path<String>, headers: HeaderMap) -> Result<Response, ApiError> {
    let dir = s.media_dir.clone().ok_or_else(|| ApiError::not_found("media serving is not configured"))?;
    let uri = {
        let corpus = s.corpus.read().expect("corpus lock");
        let v = corpus.video(&video).ok_or_else(|| ApiError::not_found(format!("unknown video `{video}`")))?;
        v.source_uri.clone()
    };
    let file = std::path::Path::new(&uri).file_name().ok_or_else(|| ApiError::not_found("video has no source file"))?;
    let bytes = tokio::fs::read(dir.join(file)).await.map_err(|_| ApiError::not_found(format!("media for `{video}` is absent")))?;
    let len = bytes.len() as u64;
    let range = headers.get(header::RANGE).and_then(|v| v.to_str().ok());
    match range {
        None => Ok(([(header::CONTENT_TYPE, "video/mp4"), (header::ACCEPT_RANGES, "bytes")], bytes).into_response()),
        Some(r) => match parse_range(r, len) {
            Some((a, b)) => Ok((
                StatusCode::PARTIAL_CONTENT,
                [
                    (header::CONTENT_TYPE, "video/mp4".to_string()),
                    (header::CONTENT_RANGE, format!("bytes {a}-{b}/{len}")),
                    (header::ACCEPT_RANGES, "bytes".to_string()),
                ],
                bytes[a as usize..=b as usize].to_vec(),
            )
                .into_response()),
            None => Ok((StatusCode::RANGE_NOT_SATISFIABLE, [(header::CONTENT_RANGE, format!("bytes */{len}"))]).into_response()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("bytes=0-9", 100), Some((0, 9)));
        assert_eq!(parse_range("bytes=90-", 100), Some((90, 99)));
        assert_eq!(parse_range("bytes=-10", 100), Some((90, 99)));
        assert_eq!(parse_range("bytes=50-500", 100), Some((50, 99)));
        assert_eq!(parse_range("bytes=100-", 100), None);
        assert_eq!(parse_range("bytes=0-1,3-4", 100), None);
        assert_eq!(parse_range("items=0-1", 100), None);
    }

    #[test]
    fn error_mapping() {
        let e: ApiError = PipelineError::Refused { reason: "race".into() }.into();
        assert_eq!((e.code, e.reason.as_deref()), (ErrorCode::Refused, Some("race")));
        let codes: Vec<i32> = [ErrorCode::Refused, ErrorCode::NotFound, ErrorCode::BackendFailure, ErrorCode::BadRequest, ErrorCode::Conflict]
            .iter()
            .map(|c| c.exit_code())
            .collect();
        assert_eq!(codes, [2, 3, 4, 5, 6]);
        assert_eq!(serde_json::to_value(ErrorCode::BackendFailure).unwrap(), "backend-failure");
    }
}
