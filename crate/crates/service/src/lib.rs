//! HTTP/JSON facade over uniform datasets, their statistics and experiment
//! runs. Every route lives under `/api`; see [`router`].

mod error;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use flowar_core::experiment::{
    compare_runs, execute_run, list_runs, load_fold, load_run, load_tree_text, read_status,
    DatasetSource, DatasetStore, ExperimentConfig, ExperimentError, RunComparison, RunListing,
    RunRecord, RunWriter, StatusDocument,
};
use flowar_core::evaluation::FoldResult;
use flowar_core::model::{
    explore_stats, ActivityAnnotation, ActivityMeta, Dataset, Instant, SensorEvent, SensorMeta, StatsReport,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ErrorCode};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("cannot load dataset {id:?}: {source}")]
    Dataset { id: String, source: ExperimentError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct DatasetEntry {
    dataset: Arc<Dataset>,
    stats: OnceLock<Arc<StatsReport>>,
}

impl DatasetEntry {
    fn stats(&self) -> Arc<StatsReport> {
        self.stats.get_or_init(|| Arc::new(explore_stats(&self.dataset))).clone()
    }
}

/// Datasets loaded once at startup and shared read-only, plus the run root.
pub struct AppState {
    datasets: BTreeMap<String, DatasetEntry>,
    runs_root: PathBuf,
}

impl AppState {
    /// Loads every uniform dataset under `data_root`; creates `runs_root`
    /// when missing.
    pub fn load(data_root: &FsPath, runs_root: &FsPath) -> Result<Self, ServiceError> {
        if !data_root.is_dir() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("data root {} is not a directory", data_root.display()),
            )
            .into());
        }
        let store = DatasetStore::new(data_root);
        let mut datasets = BTreeMap::new();
        for id in store.ids()? {
            let dataset = store
                .load(&id)
                .map_err(|source| ServiceError::Dataset { id: id.clone(), source })?;
            datasets.insert(id, DatasetEntry { dataset: Arc::new(dataset), stats: OnceLock::new() });
        }
        std::fs::create_dir_all(runs_root)?;
        Ok(AppState { datasets, runs_root: runs_root.to_path_buf() })
    }

    fn entry(&self, id: &str) -> Result<&DatasetEntry, ApiError> {
        self.datasets.get(id).ok_or_else(|| ExperimentError::DatasetNotFound(id.to_string()).into())
    }
}

impl DatasetSource for AppState {
    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ExperimentError> {
        self.datasets
            .get(id)
            .map(|e| e.dataset.clone())
            .ok_or_else(|| ExperimentError::DatasetNotFound(id.to_string()))
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs file-system work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn parse_day(text: &str) -> Result<NaiveDate, ApiError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| {
        ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidDay, format!("expected YYYY-MM-DD, got {text:?}"))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetListing {
    pub id: String,
    pub name: String,
    pub days: usize,
    pub sensors: usize,
    pub activities: usize,
    pub events: usize,
    pub annotations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDetail {
    pub id: String,
    pub name: String,
    pub timezone: String,
    pub sensors: Vec<SensorMeta>,
    pub activities: Vec<ActivityMeta>,
    pub residents: Vec<String>,
    pub days: Vec<NaiveDate>,
    pub events: usize,
    pub annotations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTimeline {
    pub dataset_id: String,
    pub day: NaiveDate,
    pub start: Instant,
    pub end: Instant,
    pub events: Vec<SensorEvent>,
    pub annotations: Vec<ActivityAnnotation>,
}

#[derive(Debug, Deserialize)]
struct DayQuery {
    day: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedRun {
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeText {
    pub test_day: NaiveDate,
    pub text: String,
}

async fn list_datasets(State(st): State<Shared>) -> ApiResult<Vec<DatasetListing>> {
    Ok(Json(
        st.datasets
            .iter()
            .map(|(id, e)| DatasetListing {
                id: id.clone(),
                name: e.dataset.name.clone(),
                days: e.dataset.local_days().len(),
                sensors: e.dataset.sensors.len(),
                activities: e.dataset.activities.len(),
                events: e.dataset.events.len(),
                annotations: e.dataset.annotations.len(),
            })
            .collect(),
    ))
}

async fn dataset_detail(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<DatasetDetail> {
    let d = &st.entry(&id)?.dataset;
    Ok(Json(DatasetDetail {
        id,
        name: d.name.clone(),
        timezone: d.timezone.name().to_string(),
        sensors: d.sensors.clone(),
        activities: d.activities.clone(),
        residents: d.residents.clone(),
        days: d.local_days(),
        events: d.events.len(),
        annotations: d.annotations.len(),
    }))
}

async fn dataset_stats(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<StatsReport> {
    st.entry(&id)?;
    let report = blocking(move || Ok(st.entry(&id)?.stats())).await?;
    Ok(Json((*report).clone()))
}

async fn dataset_timeline(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<DayQuery>,
) -> ApiResult<DayTimeline> {
    let d = &st.entry(&id)?.dataset;
    let text = q.day.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidDay, "missing ?day=YYYY-MM-DD")
    })?;
    let day = parse_day(&text)?;
    let (start, end) = d.local_day_bounds(day);
    let (events, annotations) = d.day_slice(day);
    Ok(Json(DayTimeline { dataset_id: id, day, start, end, events, annotations }))
}

async fn create_run(
    State(st): State<Shared>,
    body: Result<Json<ExperimentConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<CreatedRun>), ApiError> {
    let Json(config) =
        body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidConfig, e.body_text()))?;
    config
        .check()
        .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidConfig, m))?;
    st.entry(&config.dataset_id)?;

    let root = st.runs_root.clone();
    let cfg = config.clone();
    let writer = blocking(move || RunWriter::create(&root, &cfg).map_err(ApiError::from)).await?;
    let run_id = writer.run_id().to_string();
    tokio::task::spawn_blocking(move || {
        if let Err(e) = execute_run(writer, &config, st.as_ref()) {
            eprintln!("run could not record its final status: {e}");
        }
    });
    Ok((StatusCode::ACCEPTED, Json(CreatedRun { run_id })))
}

async fn runs(State(st): State<Shared>) -> ApiResult<Vec<RunListing>> {
    blocking(move || Ok(list_runs(&st.runs_root)?)).await.map(Json)
}

async fn run_record(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<RunRecord> {
    blocking(move || Ok(load_run(&st.runs_root, &id)?.record)).await.map(Json)
}

async fn run_status(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusDocument> {
    blocking(move || Ok(read_status(&st.runs_root, &id)?)).await.map(Json)
}

async fn run_fold(State(st): State<Shared>, Path((id, day)): Path<(String, String)>) -> ApiResult<FoldResult> {
    let day = parse_day(&day)?;
    blocking(move || {
        load_fold(&st.runs_root, &id, day)?.ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, ErrorCode::FoldNotFound, format!("run {id} has no fold {day}"))
        })
    })
    .await
    .map(Json)
}

async fn run_tree(State(st): State<Shared>, Path((id, day)): Path<(String, String)>) -> ApiResult<TreeText> {
    let test_day = parse_day(&day)?;
    blocking(move || {
        let text = load_tree_text(&st.runs_root, &id, test_day)?.ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, ErrorCode::FoldNotFound, format!("run {id} has no tree for {test_day}"))
        })?;
        Ok(TreeText { test_day, text })
    })
    .await
    .map(Json)
}

async fn run_compare(State(st): State<Shared>, Path((a, b)): Path<(String, String)>) -> ApiResult<RunComparison> {
    blocking(move || {
        let ra = load_run(&st.runs_root, &a)?.record;
        let rb = load_run(&st.runs_root, &b)?.record;
        Ok(compare_runs(&ra, &rb)?)
    })
    .await
    .map(Json)
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}", get(dataset_detail))
        .route("/datasets/{id}/stats", get(dataset_stats))
        .route("/datasets/{id}/timeline", get(dataset_timeline))
        .route("/runs", get(runs).post(create_run))
        .route("/runs/{id}", get(run_record))
        .route("/runs/{id}/status", get(run_status))
        .route("/runs/{id}/folds/{date}", get(run_fold))
        .route("/runs/{id}/tree/{date}", get(run_tree))
        .route("/runs/{a}/compare/{b}", get(run_compare))
        .with_state(Arc::new(state));
    Router::new().nest("/api", api).layer(CorsLayer::permissive())
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

/// Serves the API on `addr` until Ctrl-C.
pub async fn serve(addr: &str, data_root: &FsPath, runs_root: &FsPath) -> Result<(), ServiceError> {
    let state = AppState::load(data_root, runs_root)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::BindFailure { addr: addr.to_string(), source })?;
    let local: SocketAddr = listener.local_addr()?;
    eprintln!("listening on http://{local}/api");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown_signal()).await?;
    Ok(())
}
