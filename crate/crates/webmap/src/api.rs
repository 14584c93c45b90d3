//! Read-only JSON API over a loaded data dir.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use webmap_core::embedding::EmbeddingProvider;
use webmap_core::overlay::{
    resolve_query, ClusterRef, DocLink as ClusterDocLink, OverlayError, QueryResult,
};
use webmap_core::proxgraph::TermSelector;
use webmap_core::signpost::{DocLink, ScoredTerm, SignpostError};
use webmap_core::subcluster::SubclusterRecord;

use crate::error::WebmapError;
use crate::store::{Store, Trace};

pub const DEFAULT_TRACE_DEPTH: usize = 5;
pub const MAX_TRACE_DEPTH: usize = 1000;

/// Immutable state shared by all request handlers.
pub struct ApiState {
    pub store: Store,
    pub provider: EmbeddingProvider,
    pub selector: TermSelector,
}

impl ApiState {
    pub fn new(store: Store) -> Result<Self, WebmapError> {
        let provider = store.config.provider()?;
        let selector = store.config.selector()?;
        Ok(Self {
            store,
            provider,
            selector,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ClusterSummary {
    pub trc: String,
    pub peer_id: String,
    pub doc_count: usize,
    pub subcluster_count: usize,
    pub outlier_count: usize,
}

#[derive(Debug, Serialize)]
pub struct ClusterLink {
    pub from: ClusterRef,
    pub to: ClusterRef,
}

#[derive(Debug, Serialize)]
pub struct MapView {
    pub clusters: Vec<ClusterSummary>,
    /// Every stored cluster link; each bidirectional pair appears twice.
    pub links: Vec<ClusterLink>,
}

#[derive(Debug, Serialize)]
pub struct ClusterView {
    pub trc: String,
    pub peer_id: String,
    pub hosts: Vec<String>,
    pub docs: Vec<ClusterDocLink>,
    pub subclusters: Vec<SubclusterRecord>,
    pub related: Vec<ClusterRef>,
    pub reclustering_queue: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SignpostView {
    pub doc_id: String,
    pub title: String,
    pub url: String,
    pub cluster: ClusterRef,
    pub authorities: Vec<ScoredTerm>,
    pub hubs: Vec<ScoredTerm>,
    pub links: Vec<DocLink>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    suggestion: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: message.into(),
                suggestion: None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<WebmapError> for ApiError {
    fn from(e: WebmapError) -> Self {
        let status = match &e {
            WebmapError::UnknownCluster(_) | WebmapError::UnknownDocument(_) => {
                StatusCode::NOT_FOUND
            }
            WebmapError::Signpost(SignpostError::NotFound(_)) => StatusCode::NOT_FOUND,
            WebmapError::Overlay(o) => return o.clone().into(),
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<OverlayError> for ApiError {
    fn from(e: OverlayError) -> Self {
        match e {
            OverlayError::NoMatch { suggestion } => Self {
                status: StatusCode::NOT_FOUND,
                body: ErrorBody {
                    error: "no cluster matches the query".into(),
                    suggestion,
                },
            },
            OverlayError::EmptyQuery => Self::new(StatusCode::BAD_REQUEST, e.to_string()),
            OverlayError::UnknownCluster { .. }
            | OverlayError::UnknownDocument(_)
            | OverlayError::UnknownPeer(_) => Self::new(StatusCode::NOT_FOUND, e.to_string()),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

type Shared = Arc<ApiState>;
type Params = Query<BTreeMap<String, String>>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/map", get(map))
        .route("/api/cluster/{trc}", get(cluster))
        .route("/api/doc/{id}/signpost", get(signpost))
        .route("/api/trace/{id}", get(trace))
        .route("/api/search", get(search))
        .fallback(not_found)
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: ApiState, addr: SocketAddr) -> Result<(), WebmapError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| WebmapError::Bind { addr, source })?;
    tracing::info!(%addr, "serving");
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| WebmapError::Io {
            path: format!("serve {addr}").into(),
            source: e,
        })
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such resource")
}

async fn map(State(s): State<Shared>) -> Json<MapView> {
    let mut clusters = Vec::new();
    let mut links = Vec::new();
    for (at, cf) in s.store.map.clusters() {
        clusters.push(ClusterSummary {
            trc: at.trc.clone(),
            peer_id: at.peer_id.clone(),
            doc_count: cf.doc_links.len(),
            subcluster_count: cf.subclusters.len(),
            outlier_count: cf.subclusters.iter().filter(|r| r.outlier).count(),
        });
        links.extend(cf.cluster_links.iter().map(|to| ClusterLink {
            from: at.clone(),
            to: to.clone(),
        }));
    }
    Json(MapView { clusters, links })
}

async fn cluster(
    State(s): State<Shared>,
    Path(trc): Path<String>,
    Query(params): Params,
) -> Result<Json<ClusterView>, ApiError> {
    let at = s
        .store
        .cluster_ref(&trc, params.get("peer").map(String::as_str))?;
    let cf = s.store.map.cluster(&at)?;
    Ok(Json(ClusterView {
        hosts: s.store.map.lookup_cluster(&trc).into_iter().collect(),
        docs: cf.doc_links.iter().cloned().collect(),
        subclusters: cf.subclusters.clone(),
        related: cf.cluster_links.iter().cloned().collect(),
        reclustering_queue: cf
            .subclusters
            .iter()
            .filter(|r| r.outlier)
            .flat_map(|r| r.doc_ids.iter().cloned())
            .collect(),
        trc: at.trc,
        peer_id: at.peer_id,
    }))
}

async fn signpost(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<SignpostView>, ApiError> {
    let (cluster, sp) = s.store.doc_signpost(&id)?;
    let (_, doc) = s
        .store
        .map
        .document(&id)
        .ok_or_else(|| WebmapError::UnknownDocument(id.clone()))?;
    let (authorities, hubs) = sp
        .docs
        .get(&id)
        .map(|d| (d.authorities.clone(), d.hubs.clone()))
        .unwrap_or_default();
    Ok(Json(SignpostView {
        title: doc.title.clone(),
        url: doc.url.clone(),
        links: sp
            .links
            .iter()
            .filter(|l| l.from_doc == id)
            .cloned()
            .collect(),
        doc_id: id,
        cluster,
        authorities,
        hubs,
    }))
}

async fn trace(
    State(s): State<Shared>,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<Trace>, ApiError> {
    let depth = match params.get("depth") {
        None => DEFAULT_TRACE_DEPTH,
        Some(d) => match d.parse::<usize>() {
            Ok(n) if n <= MAX_TRACE_DEPTH => n,
            _ => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    format!("depth must be an integer in 0..={MAX_TRACE_DEPTH}"),
                ))
            }
        },
    };
    Ok(Json(s.store.trace(&id, depth)?))
}

async fn search(
    State(s): State<Shared>,
    Query(params): Params,
) -> Result<Json<QueryResult>, ApiError> {
    let q = params
        .get("q")
        .filter(|q| !q.trim().is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing query parameter q"))?;
    let peer = params.get("peer").map(String::as_str);
    Ok(Json(resolve_query(
        &s.store.map,
        &s.provider,
        &s.selector,
        q,
        peer,
    )?))
}
