//! HTTP search API over an immutable snapshot.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{AugmentationStats, NormalizedCohort};
use crate::catalog::Dimension;
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::pipeline::Snapshot;

pub const DEFAULT_K: usize = 10;
pub const MAX_K: usize = 1000;
pub const SOURCE_URL: &str = "https://www.ncbi.nlm.nih.gov/geo/query/acc.cgi?acc=";

pub fn source_url(accession: &str) -> String {
    format!("{SOURCE_URL}{accession}")
}

pub struct AppState {
    snapshot: ArcSwapOption<Snapshot>,
    default_k: usize,
}

impl AppState {
    pub fn new(snapshot: Option<Snapshot>, default_k: usize) -> Arc<Self> {
        Arc::new(AppState {
            snapshot: ArcSwapOption::from(snapshot.map(Arc::new)),
            default_k,
        })
    }

    pub fn load(dir: &Path, default_k: usize) -> Result<Arc<Self>> {
        Ok(Self::new(Some(Snapshot::load(dir)?), default_k))
    }

    pub fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.load_full()
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub accession: String,
    pub title: String,
    pub similarity: f64,
    pub rank: usize,
    pub metadata: BTreeMap<Dimension, Vec<String>>,
    pub source_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub hits: Vec<Hit>,
}

#[derive(Debug, Serialize)]
pub struct CohortView<'a> {
    #[serde(flatten)]
    pub cohort: &'a NormalizedCohort,
    pub source_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub provider_id: String,
    pub d_in: usize,
    pub d_out: usize,
    pub variant: String,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub catalog_size: usize,
    pub index_size: usize,
    pub vocabulary_terms: usize,
    pub model: ModelInfo,
    pub augmentation: AugmentationStats,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReloadRequest {
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn unavailable() -> ApiError {
    ApiError(StatusCode::SERVICE_UNAVAILABLE, "no snapshot loaded".into())
}

fn loaded(state: &AppState) -> std::result::Result<Arc<Snapshot>, ApiError> {
    state.current().ok_or_else(unavailable)
}

pub fn query(snap: &Snapshot, text: &str, k: usize) -> Result<QueryResponse> {
    if text.trim().is_empty() {
        return Err(Error::Input("query text is empty".into()));
    }
    if k == 0 || k > MAX_K {
        return Err(Error::Input(format!("k must be between 1 and {MAX_K}")));
    }
    let v = snap.head.project(snap.provider.embed_text(text)?.values())?;
    let hits = snap
        .index
        .search(v.values(), k)?
        .into_iter()
        .map(|h| {
            let c = snap.catalog.get(&h.accession);
            let metadata = Dimension::ALL
                .iter()
                .map(|d| (*d, c.map(|c| c.record.values(*d).to_vec()).unwrap_or_default()))
                .collect();
            Hit {
                title: c.map(|c| c.record.title.clone()).unwrap_or_default(),
                source_url: source_url(&h.accession),
                accession: h.accession,
                similarity: h.similarity,
                rank: h.rank,
                metadata,
            }
        })
        .collect();
    Ok(QueryResponse { hits })
}

pub fn stats(snap: &Snapshot) -> StatsResponse {
    StatsResponse {
        catalog_size: snap.catalog.len(),
        index_size: snap.index.len(),
        vocabulary_terms: snap.vocabulary.total_terms(),
        model: ModelInfo {
            provider_id: snap.model.provider_id.clone(),
            d_in: snap.model.d_in,
            d_out: snap.model.d_out,
            variant: snap.model.variant.to_string(),
            scale: snap.model.scale,
        },
        augmentation: snap.stats.clone(),
    }
}

async fn handle_query(
    State(state): State<Arc<AppState>>,
    Json(req): Json<QueryRequest>,
) -> std::result::Result<Json<QueryResponse>, ApiError> {
    let snap = loaded(&state)?;
    query(&snap, &req.text, req.k.unwrap_or(state.default_k))
        .map(Json)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))
}

async fn handle_cohort(State(state): State<Arc<AppState>>, UrlPath(accession): UrlPath<String>) -> Response {
    let snap = match loaded(&state) {
        Ok(s) => s,
        Err(e) => return e.into_response(),
    };
    match snap.catalog.get(&accession) {
        Some(cohort) => Json(CohortView {
            cohort,
            source_url: source_url(&accession),
        })
        .into_response(),
        None => ApiError(StatusCode::NOT_FOUND, format!("unknown accession {accession}")).into_response(),
    }
}

async fn handle_stats(State(state): State<Arc<AppState>>) -> std::result::Result<Json<StatsResponse>, ApiError> {
    let snap = loaded(&state)?;
    Ok(Json(stats(&snap)))
}

async fn handle_health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn handle_reload(
    State(state): State<Arc<AppState>>,
    body: Option<Json<ReloadRequest>>,
) -> std::result::Result<Json<serde_json::Value>, ApiError> {
    let dir = match body.and_then(|Json(r)| r.snapshot_dir) {
        Some(d) => d,
        None => state
            .current()
            .map(|s| s.dir.clone())
            .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "snapshot_dir is required".into()))?,
    };
    // load fully before swapping so no request sees a partial snapshot
    let dir_for_load = dir.clone();
    let snap = tokio::task::spawn_blocking(move || Snapshot::load(&dir_for_load))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let size = snap.catalog.len();
    state.snapshot.store(Some(Arc::new(snap)));
    Ok(Json(
        json!({ "status": "reloaded", "snapshot_dir": dir, "catalog_size": size }),
    ))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/query", post(handle_query))
        .route("/v1/cohorts/:accession", get(handle_cohort))
        .route("/v1/stats", get(handle_stats))
        .route("/v1/health", get(handle_health))
        .route("/v1/reload", post(handle_reload))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    tracing::info!("listening on {addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
