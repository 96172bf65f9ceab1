//! HTTP API over exploration sessions.
//!
//! Every route lives under `/v1`. A session owns one uploaded table, the
//! workspace derived from it and the story built on top. Mutations of one
//! session are serialized; different sessions run concurrently. With a
//! persistence directory configured, each session is snapshotted after every
//! mutation and rehydrated on first access after a restart.

pub mod error;
pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use iw_core::config::EngineConfig;
use iw_core::engine::{NodeView, QueryResponse, Session, Workspace};
use iw_core::insight::{Diagnostics, Insight, InsightType};
use iw_core::narrator::InsightDescription;
use iw_core::registry::{ProviderRegistry, Providers};
use iw_core::story::{HistoryStep, NodeId, StateOp, Story};
use iw_core::table::{Locator, Schema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::oneshot;

pub use error::ApiError;
use store::{SessionRecord, Store, SESSION_SCHEMA};

const BODY_LIMIT: usize = 64 * 1024 * 1024;

type ApiResult<T> = Result<T, ApiError>;

/// Extraction summary returned when a session becomes ready.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub dropped_rows: usize,
    pub dimensions: Vec<String>,
    pub measures: Vec<String>,
    pub insights: usize,
    pub per_type: BTreeMap<String, usize>,
    pub subspaces: usize,
    pub graph_edges: usize,
    pub catalog_hash: String,
    pub diagnostics: Diagnostics,
    /// The first story layer.
    pub seeds: Vec<NodeView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Building,
    Ready,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusResponse {
    pub session_id: String,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadRequest {
    csv: String,
    #[serde(default)]
    schema_hints: Option<Schema>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    focused_node: NodeId,
    #[serde(default)]
    text: String,
    #[serde(default)]
    step: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddNodeRequest {
    parent: NodeId,
    insight_id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    new_parent: NodeId,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRequest {
    op: StateOp,
}

/// An insight together with its description.
#[derive(Debug, Clone, Serialize)]
pub struct InsightView {
    #[serde(flatten)]
    pub insight: Insight,
    pub description: InsightDescription,
}

#[derive(Clone)]
struct Ready {
    session: Arc<tokio::sync::Mutex<Session>>,
    summary: Arc<Summary>,
}

#[derive(Clone)]
enum Slot {
    Building,
    Ready(Ready),
    Failed(ApiError),
}

struct Inner {
    config: EngineConfig,
    providers: Providers,
    store: Option<Store>,
    sessions: Mutex<HashMap<String, Slot>>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// Resolves providers through `registry`; offline configs get stubs.
    pub fn new(config: EngineConfig, registry: &ProviderRegistry) -> iw_core::Result<Self> {
        let providers = registry.resolve(&config)?;
        Self::with_providers(config, providers)
    }

    pub fn with_providers(config: EngineConfig, providers: Providers) -> iw_core::Result<Self> {
        config.validate()?;
        let store = config.persistence_dir.as_ref().map(Store::open).transpose()?;
        Ok(AppState {
            inner: Arc::new(Inner {
                config,
                providers,
                store,
                sessions: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.inner.config
    }

    fn slots(&self) -> std::sync::MutexGuard<'_, HashMap<String, Slot>> {
        self.inner.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Content-derived id with an ordinal, so re-uploading the same bytes
    /// into a fresh service yields the same id.
    fn allocate_id(&self, csv: &str, hints: Option<&Schema>) -> String {
        let mut h = Sha256::new();
        h.update(csv.as_bytes());
        h.update([0x1f]);
        if let Some(s) = hints {
            h.update(serde_json::to_string(s).unwrap_or_default().as_bytes());
        }
        let prefix = hex::encode(&h.finalize()[..8]);
        let mut slots = self.slots();
        let mut n = 1;
        loop {
            let id = format!("{prefix}-{n}");
            let on_disk = self.inner.store.as_ref().is_some_and(|s| s.exists(&id));
            if !slots.contains_key(&id) && !on_disk {
                slots.insert(id.clone(), Slot::Building);
                return id;
            }
            n += 1;
        }
    }

    fn lookup(slots: &HashMap<String, Slot>, id: &str) -> Option<ApiResult<Ready>> {
        slots.get(id).map(|slot| match slot {
            Slot::Ready(r) => Ok(r.clone()),
            Slot::Building => Err(building(id)),
            Slot::Failed(e) => Err(e.clone()),
        })
    }

    async fn ready(&self, id: &str) -> ApiResult<Ready> {
        let found = Self::lookup(&self.slots(), id);
        match found {
            Some(r) => r,
            None => self.rehydrate(id).await,
        }
    }

    async fn rehydrate(&self, id: &str) -> ApiResult<Ready> {
        let Some(store) = self.inner.store.clone() else {
            return Err(unknown_session(id));
        };
        if !store.exists(id) {
            return Err(unknown_session(id));
        }
        {
            let mut slots = self.slots();
            if let Some(r) = Self::lookup(&slots, id) {
                return r;
            }
            slots.insert(id.to_owned(), Slot::Building);
        }
        let inner = self.inner.clone();
        let sid = id.to_owned();
        let result = tokio::task::spawn_blocking(move || {
            let p = store
                .load(&sid)
                .map_err(|e| ApiError::internal(e.to_string()))?
                .ok_or_else(|| unknown_session(&sid))?;
            let ws = Workspace::from_csv(&p.csv, p.record.hints.as_ref(), &p.record.config, inner.providers.embedding.as_ref())?;
            let story = Story::import(&p.story)?;
            Ok::<_, ApiError>(make_ready(Session::resume(sid, Arc::new(ws), story)?))
        })
        .await
        .unwrap_or_else(|e| Err(ApiError::internal(e.to_string())));
        let mut slots = self.slots();
        match &result {
            Ok(r) => {
                tracing::info!(session = id, "session rehydrated");
                slots.insert(id.to_owned(), Slot::Ready(r.clone()));
            }
            Err(_) => {
                slots.remove(id);
            }
        }
        result
    }

    /// Runs `f` on the locked session off the async runtime, snapshotting
    /// the story afterwards when `persist` is set.
    async fn with_session<T, F>(&self, id: &str, persist: bool, f: F) -> ApiResult<T>
    where
        F: FnOnce(&mut Session, &Providers) -> ApiResult<T> + Send + 'static,
        T: Send + 'static,
    {
        let ready = self.ready(id).await?;
        let guard = ready.session.lock_owned().await;
        let inner = self.inner.clone();
        tokio::task::spawn_blocking(move || {
            let mut session = guard;
            let out = f(&mut session, &inner.providers)?;
            if persist {
                if let Some(store) = &inner.store {
                    store
                        .save_story(&session.id, &session.story)
                        .map_err(|e| ApiError::internal(format!("snapshot failed: {e}")))?;
                }
            }
            Ok(out)
        })
        .await
        .unwrap_or_else(|e| Err(ApiError::internal(e.to_string())))
    }
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::not_found(format!("session {id} does not exist")).with_detail(json!({"session_id": id}))
}

fn building(id: &str) -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "session_building", format!("session {id} is still being built"))
        .with_detail(json!({"session_id": id}))
}

fn summarize(session: &Session) -> Summary {
    let ws = &session.workspace;
    let schema = ws.table().schema();
    let counts = ws.catalog().type_counts();
    let seeds = session
        .story
        .query_log()
        .iter()
        .find(|e| e.focused.is_none())
        .map(|e| e.recommended.iter().filter_map(|n| session.view(*n)).collect())
        .unwrap_or_default();
    Summary {
        rows: ws.table().row_count(),
        dropped_rows: ws.table().dropped_rows(),
        dimensions: schema.dimensions().into_iter().map(str::to_owned).collect(),
        measures: schema.measures().into_iter().map(str::to_owned).collect(),
        insights: ws.catalog().len(),
        per_type: InsightType::ALL
            .iter()
            .map(|t| (t.to_string(), counts.get(t).copied().unwrap_or(0)))
            .collect(),
        subspaces: ws.graph().node_count(),
        graph_edges: ws.graph().edges().len(),
        catalog_hash: ws.catalog().content_hash(),
        diagnostics: ws.catalog().diagnostics().clone(),
        seeds,
    }
}

fn make_ready(session: Session) -> Ready {
    let summary = Arc::new(summarize(&session));
    Ready {
        session: Arc::new(tokio::sync::Mutex::new(session)),
        summary,
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("bad_request", format!("invalid request body: {e}")))
}

fn parse_node(raw: &str) -> ApiResult<NodeId> {
    raw.parse()
        .map_err(|_| ApiError::bad_request("bad_request", format!("node id {raw:?} is not a number")))
}

pub fn router(state: AppState) -> Router {
    let sessions = Router::new()
        .route("/", post(create_session))
        .route("/{id}/status", get(status))
        .route("/{id}/subspaces", get(subspaces))
        .route("/{id}/insights/{insight}", get(insight))
        .route("/{id}/query", post(query))
        .route("/{id}/nodes", get(list_nodes).post(add_node))
        .route("/{id}/nodes/{node}", axum::routing::delete(delete_node))
        .route("/{id}/nodes/{node}/move", post(move_node))
        .route("/{id}/nodes/{node}/state", post(set_state))
        .route("/{id}/nodes/{node}/history", get(history))
        .route("/{id}/story", get(export_story).put(import_story));
    Router::new()
        .route("/v1/health", get(|| async { Json(json!({"status": "ok"})) }))
        .nest("/v1/sessions", sessions)
        .fallback(|| async { ApiError::not_found("no such route") })
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves the API on `listener` until the task is cancelled.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn build_session(inner: &Inner, id: String, csv: String, hints: Option<Schema>) -> ApiResult<Ready> {
    let ws = Workspace::from_csv(&csv, hints.as_ref(), &inner.config, inner.providers.embedding.as_ref())?;
    let session = Session::create(id.clone(), Arc::new(ws));
    if let Some(store) = &inner.store {
        let record = SessionRecord {
            schema: SESSION_SCHEMA.to_owned(),
            id,
            hints,
            config: inner.config.clone(),
        };
        store
            .create(&record, &csv, &session.story)
            .map_err(|e| ApiError::internal(format!("snapshot failed: {e}")))?;
    }
    Ok(make_ready(session))
}

/// Accepts `{csv, schema_hints?}` as JSON, or a raw CSV body.
async fn create_session(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<impl IntoResponse> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("json"));
    let (csv, hints) = if is_json {
        let req: UploadRequest = parse_body(&body)?;
        (req.csv, req.schema_hints)
    } else {
        let csv = String::from_utf8(body.to_vec())
            .map_err(|_| ApiError::bad_request("ingest", "upload is not valid UTF-8").with_detail(json!({"kind": "csv"})))?;
        (csv, None)
    };
    let id = st.allocate_id(&csv, hints.as_ref());
    let (tx, rx) = oneshot::channel();
    let state = st.clone();
    let sid = id.clone();
    tokio::spawn(async move {
        let inner = state.inner.clone();
        let build_id = sid.clone();
        let slot = match tokio::task::spawn_blocking(move || build_session(&inner, build_id, csv, hints)).await {
            Ok(Ok(ready)) => Slot::Ready(ready),
            Ok(Err(e)) => Slot::Failed(e),
            Err(e) => Slot::Failed(ApiError::internal(e.to_string())),
        };
        state.slots().insert(sid, slot.clone());
        let _ = tx.send(slot);
    });

    let budget = Duration::from_millis(st.inner.config.service.build_budget_ms);
    match tokio::time::timeout(budget, rx).await {
        Ok(Ok(Slot::Ready(r))) => {
            tracing::info!(session = %id, insights = r.summary.insights, "session ready");
            let body = StatusResponse {
                session_id: id,
                status: SessionStatus::Ready,
                summary: Some((*r.summary).clone()),
                error: None,
            };
            Ok((StatusCode::CREATED, Json(body)))
        }
        Ok(Ok(Slot::Failed(e))) => {
            st.slots().remove(&id);
            Err(e)
        }
        Ok(Ok(Slot::Building)) | Ok(Err(_)) => Err(ApiError::internal("session build was abandoned")),
        Err(_) => Ok((
            StatusCode::ACCEPTED,
            Json(StatusResponse {
                session_id: id,
                status: SessionStatus::Building,
                summary: None,
                error: None,
            }),
        )),
    }
}

async fn status(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StatusResponse>> {
    let slot = st.slots().get(&id).cloned();
    let (status, summary, error) = match slot {
        Some(Slot::Building) => (SessionStatus::Building, None, None),
        Some(Slot::Failed(e)) => (
            SessionStatus::Failed,
            None,
            Some(json!({"code": e.code, "message": e.message, "detail": e.detail})),
        ),
        Some(Slot::Ready(r)) => (SessionStatus::Ready, Some((*r.summary).clone()), None),
        None => match st.ready(&id).await {
            Ok(r) => (SessionStatus::Ready, Some((*r.summary).clone()), None),
            Err(e) if e.code == "session_building" => (SessionStatus::Building, None, None),
            Err(e) => return Err(e),
        },
    };
    Ok(Json(StatusResponse {
        session_id: id,
        status,
        summary,
        error,
    }))
}

#[derive(Debug, Serialize)]
struct SubspaceResponse {
    locator: String,
    insights: Vec<InsightView>,
}

fn view_of(session: &Session, ins: &Insight) -> ApiResult<InsightView> {
    Ok(InsightView {
        insight: ins.clone(),
        description: session.workspace.description(&ins.id)?.clone(),
    })
}

/// `?filter=dim=value&filter=…`; no filters selects the root subspace.
async fn subspaces(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
) -> ApiResult<impl IntoResponse> {
    st.with_session(&id, false, move |s, _| {
        let schema = s.workspace.table().schema();
        let mut loc = Locator::root();
        for (key, raw) in &params {
            if key != "filter" {
                return Err(ApiError::bad_request("bad_request", format!("unknown parameter `{key}`")));
            }
            let (dim, value) = raw
                .split_once('=')
                .ok_or_else(|| ApiError::bad_request("bad_filter", format!("filter {raw:?} is not dim=value")))?;
            if !schema.is_categorical(dim) {
                return Err(ApiError::bad_request("unknown_dimension", format!("`{dim}` is not a categorical dimension"))
                    .with_detail(json!({"dimension": dim})));
            }
            if loc.contains_dim(dim) {
                return Err(ApiError::bad_request("bad_filter", format!("dimension `{dim}` filtered twice")));
            }
            loc = loc.with(dim, value);
        }
        let insights = s
            .workspace
            .catalog()
            .in_subspace(&loc)
            .into_iter()
            .map(|i| view_of(s, i))
            .collect::<ApiResult<_>>()?;
        Ok(Json(SubspaceResponse {
            locator: loc.canonical(),
            insights,
        }))
    })
    .await
}

async fn insight(State(st): State<AppState>, Path((id, insight)): Path<(String, String)>) -> ApiResult<Json<InsightView>> {
    st.with_session(&id, false, move |s, _| {
        let ins = s
            .workspace
            .catalog()
            .get(&insight)
            .ok_or_else(|| ApiError::not_found(format!("insight {insight} is not in the catalog")))?;
        Ok(Json(view_of(s, ins)?))
    })
    .await
}

async fn query(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<QueryResponse>> {
    let req: QueryRequest = parse_body(&body)?;
    st.with_session(&id, true, move |s, p| Ok(Json(s.query(req.focused_node, &req.text, req.step, p)?)))
        .await
}

#[derive(Debug, Serialize)]
struct NodesResponse {
    focused: Option<NodeId>,
    nodes: Vec<NodeView>,
}

async fn list_nodes(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<NodesResponse>> {
    st.with_session(&id, false, |s, _| {
        Ok(Json(NodesResponse {
            focused: s.story.focused(),
            nodes: s.story.nodes().filter_map(|n| s.view(n.id)).collect(),
        }))
    })
    .await
}

async fn add_node(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: AddNodeRequest = parse_body(&body)?;
    st.with_session(&id, true, move |s, _| {
        let node = s.story.user_add_node(req.parent, &req.insight_id, s.workspace.catalog())?;
        let view = s.view(node).ok_or_else(|| ApiError::internal("added node vanished"))?;
        Ok((StatusCode::CREATED, Json(view)))
    })
    .await
}

/// Returns the moved subtree with its recomputed depths.
async fn move_node(
    State(st): State<AppState>,
    Path((id, node)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<NodesResponse>> {
    let node = parse_node(&node)?;
    let req: MoveRequest = parse_body(&body)?;
    st.with_session(&id, true, move |s, _| {
        s.story.move_node(node, req.new_parent)?;
        Ok(Json(NodesResponse {
            focused: s.story.focused(),
            nodes: s.story.subtree(node).into_iter().filter_map(|n| s.view(n)).collect(),
        }))
    })
    .await
}

async fn delete_node(
    State(st): State<AppState>,
    Path((id, node)): Path<(String, String)>,
) -> ApiResult<Json<serde_json::Value>> {
    let node = parse_node(&node)?;
    st.with_session(&id, true, move |s, _| {
        let removed = s.story.delete_node(node)?;
        Ok(Json(json!({ "removed": removed })))
    })
    .await
}

async fn set_state(
    State(st): State<AppState>,
    Path((id, node)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<NodeView>> {
    let node = parse_node(&node)?;
    let req: StateRequest = parse_body(&body)?;
    st.with_session(&id, true, move |s, _| {
        s.story.set_state(node, req.op)?;
        Ok(Json(s.view(node).ok_or_else(|| ApiError::internal("node vanished"))?))
    })
    .await
}

#[derive(Debug, Serialize)]
struct HistoryResponse {
    node: NodeId,
    path: Vec<HistoryStep>,
}

async fn history(
    State(st): State<AppState>,
    Path((id, node)): Path<(String, String)>,
) -> ApiResult<Json<HistoryResponse>> {
    let node = parse_node(&node)?;
    st.with_session(&id, false, move |s, _| {
        Ok(Json(HistoryResponse {
            node,
            path: s.story.history_path(node)?,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct ExportParams {
    #[serde(default)]
    pretty: bool,
}

/// The canonical `iw-story/1` document, byte for byte.
async fn export_story(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<ExportParams>,
) -> ApiResult<impl IntoResponse> {
    let text = st
        .with_session(&id, false, move |s, _| {
            Ok(if params.pretty {
                s.story.export_pretty()
            } else {
                s.story.export()
            })
        })
        .await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text))
}

async fn import_story(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("story_import", "body is not UTF-8"))?;
    let out = st
        .with_session(&id, true, move |s, _| {
            let story = Story::import(&text)?;
            if story.session_id != s.id {
                return Err(ApiError::bad_request(
                    "story_mismatch",
                    format!("story belongs to session {}, not {}", story.session_id, s.id),
                ));
            }
            let hash = s.workspace.catalog().content_hash();
            if story.catalog_hash != hash {
                return Err(ApiError::new(StatusCode::CONFLICT, "catalog_mismatch", "story was built on a different catalog")
                    .with_detail(json!({"expected": hash, "found": story.catalog_hash})));
            }
            story.check_closure(s.workspace.catalog())?;
            s.story = story;
            Ok(s.story.export())
        })
        .await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], out))
}
