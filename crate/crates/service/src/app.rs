//! Routes, shared state and error mapping.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use titecrm_core::crm::Skeleton;
use titecrm_core::engine::{
    Evaluability, PatientSegment, PatientStatus, Recommendation, TrialEvent, TrialState,
};
use titecrm_core::{DesignConfig, Error as CoreError, Strategy};

use crate::store::{DiskStore, StoreError, TrialMeta};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown trial {0}")]
    UnknownTrial(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("persistence failure: {0}")]
    Store(#[from] StoreError),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::UnknownTrial(_) => StatusCode::NOT_FOUND,
            ApiError::Core(CoreError::UnknownPatient(_)) => StatusCode::NOT_FOUND,
            ApiError::Core(
                CoreError::OutOfOrder { .. }
                | CoreError::DuplicateTerminal { .. }
                | CoreError::EnrollmentClosed
                | CoreError::InvalidEvent { .. },
            ) => StatusCode::CONFLICT,
            ApiError::Core(CoreError::NonFiniteIntegrand { .. }) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// One live trial. The mutex serializes writers; readers clone a snapshot.
struct TrialSlot {
    meta: TrialMeta,
    state: TrialState,
}

#[derive(Default)]
struct Registry {
    trials: BTreeMap<String, Arc<Mutex<TrialSlot>>>,
    next_id: u64,
}

#[derive(Clone)]
pub struct AppState {
    registry: Arc<RwLock<Registry>>,
    store: Option<DiskStore>,
}

impl AppState {
    /// Trials live only in memory and are lost on shutdown.
    pub fn in_memory() -> Self {
        Self { registry: Arc::default(), store: None }
    }

    /// Opens a store and replays every trial in it.
    pub fn with_store(store: DiskStore) -> Result<Self, StoreError> {
        let mut registry = Registry::default();
        for (meta, state) in store.load_all()? {
            if let Some(n) = meta.trial_id.strip_prefix("trial-").and_then(|n| n.parse::<u64>().ok()) {
                registry.next_id = registry.next_id.max(n);
            }
            registry.trials.insert(meta.trial_id.clone(), Arc::new(Mutex::new(TrialSlot { meta, state })));
        }
        Ok(Self { registry: Arc::new(RwLock::new(registry)), store: Some(store) })
    }

    pub fn is_persistent(&self) -> bool {
        self.store.is_some()
    }

    async fn slot(&self, trial_id: &str) -> Result<Arc<Mutex<TrialSlot>>, ApiError> {
        self.registry
            .read()
            .await
            .trials
            .get(trial_id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownTrial(trial_id.to_string()))
    }

    /// Derived state of a trial, for comparison with an in-process fold.
    pub async fn trial_state(&self, trial_id: &str) -> Option<TrialState> {
        let slot = self.slot(trial_id).await.ok()?;
        let state = slot.lock().await.state.clone();
        Some(state)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/trials", post(create_trial).get(list_trials))
        .route("/trials/{id}/patients", post(enroll_patient))
        .route("/trials/{id}/events", post(post_event))
        .route("/trials/{id}/recommendation", get(get_recommendation))
        .route("/trials/{id}/state", get(get_state))
        .with_state(state)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateTrial {
    pub design: DesignConfig,
    pub strategy: Strategy,
    /// Explicit skeleton; built from the design's indifference interval when absent.
    #[serde(default)]
    pub skeleton: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub trial_id: String,
    pub skeleton: Vec<f64>,
    pub recommendation: Recommendation,
}

async fn create_trial(State(app): State<AppState>, Json(req): Json<CreateTrial>) -> Result<(StatusCode, Json<Created>), ApiError> {
    req.design.validate()?;
    let skeleton = match req.skeleton {
        Some(probs) => Skeleton::from_probs(probs, req.design.target)?,
        None => Skeleton::build(req.design.target, req.design.halfwidth, req.design.prior_mtd, req.design.num_doses)?,
    };
    let state = TrialState::with_skeleton(req.design.clone(), skeleton.clone(), req.strategy)?;
    let recommendation = state.recommendation(0.0)?;

    let mut registry = app.registry.write().await;
    registry.next_id += 1;
    let trial_id = format!("trial-{:04}", registry.next_id);
    let probs = skeleton.probs().to_vec();
    let meta = TrialMeta { trial_id: trial_id.clone(), design: req.design, strategy: req.strategy, skeleton };
    if let Some(store) = &app.store {
        store.create(&meta)?;
    }
    registry.trials.insert(trial_id.clone(), Arc::new(Mutex::new(TrialSlot { meta, state })));
    tracing::info!(%trial_id, "trial created");
    Ok((
        StatusCode::CREATED,
        Json(Created { trial_id, skeleton: probs, recommendation }),
    ))
}

#[derive(Debug, Serialize)]
pub struct TrialListing {
    pub trials: Vec<String>,
}

async fn list_trials(State(app): State<AppState>) -> Json<TrialListing> {
    Json(TrialListing { trials: app.registry.read().await.trials.keys().cloned().collect() })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrollRequest {
    pub time: f64,
}

/// Counts and gate status after a write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSummary {
    pub event: TrialEvent,
    pub patient_status: PatientStatus,
    pub evaluability: Evaluability,
    /// Strategy C weight frozen for an unevaluable progressor, if any.
    pub frozen_weight: Option<f64>,
    pub evaluable_count: usize,
    pub pending_count: usize,
    pub unevaluable_count: usize,
    pub enrollment_open: bool,
    pub clock: f64,
}

fn summarize(state: &TrialState, event: TrialEvent) -> StatusSummary {
    let patient = state.patient(event.patient_id).expect("event was applied to a known patient");
    StatusSummary {
        event,
        patient_status: patient.status,
        evaluability: titecrm_core::engine::evaluability(patient, state.phi(), state.design().window),
        frozen_weight: patient.frozen_weight,
        evaluable_count: state.evaluable_count(),
        pending_count: state.pending_count(),
        unevaluable_count: state.unevaluable_count(),
        enrollment_open: state.enrollment_open(),
        clock: state.clock(),
    }
}

/// Validates `event` against a copy of the state, persists it, then commits.
fn commit(app: &AppState, slot: &mut TrialSlot, event: &TrialEvent) -> Result<(), ApiError> {
    let mut next = slot.state.clone();
    next.apply(event)?;
    if let Some(store) = &app.store {
        store.append(&slot.meta.trial_id, event)?;
    }
    slot.state = next;
    Ok(())
}

async fn enroll_patient(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<EnrollRequest>,
) -> ApiResult<StatusSummary> {
    let slot = app.slot(&id).await?;
    let mut slot = slot.lock().await;
    let mut probe = slot.state.clone();
    probe.assign_next_patient(req.time)?;
    let event = *probe.events().last().expect("enrollment recorded an event");
    commit(&app, &mut slot, &event)?;
    Ok(Json(summarize(&slot.state, event)))
}

async fn post_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(event): Json<TrialEvent>,
) -> ApiResult<StatusSummary> {
    let slot = app.slot(&id).await?;
    let mut slot = slot.lock().await;
    commit(&app, &mut slot, &event)?;
    Ok(Json(summarize(&slot.state, event)))
}

#[derive(Debug, Deserialize)]
pub struct AtTime {
    /// Defaults to the trial clock.
    pub at_time: Option<f64>,
}

async fn get_recommendation(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<AtTime>,
) -> ApiResult<Recommendation> {
    let slot = app.slot(&id).await?;
    let state = slot.lock().await.state.clone();
    Ok(Json(state.recommendation(q.at_time.unwrap_or(state.clock()))?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialView {
    pub trial_id: String,
    pub design: DesignConfig,
    pub strategy: Strategy,
    pub skeleton: Vec<f64>,
    pub at_time: f64,
    pub clock: f64,
    pub enrollment_open: bool,
    pub evaluable_count: usize,
    pub pending_count: usize,
    pub unevaluable_count: usize,
    pub patients: Vec<PatientSegment>,
    pub events: Vec<TrialEvent>,
}

async fn get_state(State(app): State<AppState>, Path(id): Path<String>, Query(q): Query<AtTime>) -> ApiResult<TrialView> {
    let slot = app.slot(&id).await?;
    let (meta, state) = {
        let slot = slot.lock().await;
        (slot.meta.clone(), slot.state.clone())
    };
    let at_time = q.at_time.unwrap_or(state.clock());
    if !at_time.is_finite() || at_time < state.clock() {
        return Err(CoreError::OutOfOrder { time: at_time, clock: state.clock() }.into());
    }
    Ok(Json(TrialView {
        trial_id: meta.trial_id,
        design: meta.design,
        strategy: meta.strategy,
        skeleton: meta.skeleton.probs().to_vec(),
        at_time,
        clock: state.clock(),
        enrollment_open: state.enrollment_open(),
        evaluable_count: state.evaluable_count(),
        pending_count: state.pending_count(),
        unevaluable_count: state.unevaluable_count(),
        patients: state.timeline(at_time),
        events: state.events().to_vec(),
    }))
}
