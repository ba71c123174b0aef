//! HTTP routes and shared server state.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use crate::api::*;
use crate::error::ApiError;
use crate::journal::{Event, Journal, JournalError};
use crate::session::Session;
use crate::API_VERSION;

/// Seconds a client should wait before polling a training session again.
pub const RETRY_AFTER_S: u64 = 1;

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    data_dir: PathBuf,
    sessions: RwLock<BTreeMap<String, Shared>>,
    journal: Option<Mutex<Journal>>,
}

impl AppState {
    /// State without persistence.
    pub fn ephemeral(data_dir: impl Into<PathBuf>) -> Arc<Self> {
        Arc::new(Self {
            data_dir: data_dir.into(),
            sessions: RwLock::new(BTreeMap::new()),
            journal: None,
        })
    }

    /// Opens (or creates) `journal` and replays it, retraining synchronously.
    pub fn with_journal(data_dir: impl Into<PathBuf>, journal: &Path) -> Result<Arc<Self>, ReplayError> {
        let data_dir = data_dir.into();
        let (journal, events) = Journal::open(journal)?;
        let mut sessions = BTreeMap::new();
        for (i, ev) in events.into_iter().enumerate() {
            let at = |e: ApiError| ReplayError::Event { index: i + 1, msg: e.to_string() };
            match ev {
                Event::Header { .. } => return Err(ReplayError::Event { index: i + 1, msg: "unexpected header".into() }),
                Event::Created { session_id, request } => {
                    let s = Session::create(session_id.clone(), request, &data_dir).map_err(at)?;
                    sessions.insert(session_id, s);
                }
                Event::Labels { session_id, labels } => {
                    let s = sessions.get_mut(&session_id).ok_or_else(|| ReplayError::Event {
                        index: i + 1,
                        msg: format!("unknown session {session_id}"),
                    })?;
                    let req = LabelsRequest {
                        api_version: None,
                        labels: labels
                            .iter()
                            .map(|&(id, c)| (id.to_string(), ClassRef::Ordinal(c)))
                            .collect(),
                    };
                    let entries = s.validate_labels(&req).map_err(at)?;
                    if let Some(batch) = s.apply_labels(&entries) {
                        s.train_now(&batch);
                    }
                }
            }
        }
        Ok(Arc::new(Self {
            data_dir,
            sessions: RwLock::new(sessions.into_iter().map(|(k, v)| (k, Arc::new(Mutex::new(v)))).collect()),
            journal: Some(Mutex::new(journal)),
        }))
    }

    fn record(&self, ev: &Event) -> Result<(), ApiError> {
        match &self.journal {
            Some(j) => j
                .lock()
                .expect("journal lock")
                .append(ev)
                .map_err(|e| ApiError::Internal(e.to_string())),
            None => Ok(()),
        }
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session '{id}'")))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("journal event {index}: {msg}")]
    Event { index: usize, msg: String },
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/batch", get(batch))
        .route("/sessions/{id}/labels", post(submit_labels))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/export", get(export))
        .with_state(state)
}

/// Parses JSON bodies by hand so that every malformed body is a 400.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

fn lock(s: &Shared) -> std::sync::MutexGuard<'_, Session> {
    s.lock().expect("session lock")
}

async fn health(State(st): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        api_version: API_VERSION,
        status: "ok".into(),
        sessions: st.session_count(),
    })
}

async fn create_session(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let id = uuid::Uuid::new_v4().to_string();
    let session = tokio::task::spawn_blocking({
        let (id, req, data_dir) = (id.clone(), req.clone(), st.data_dir.clone());
        move || Session::create(id, req, &data_dir)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    st.record(&Event::Created {
        session_id: id.clone(),
        request: req,
    })?;
    let body = CreateResponse {
        api_version: API_VERSION,
        session: session.info(),
        batch: session.batch(),
    };
    st.sessions
        .write()
        .expect("session map lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn list_sessions(State(st): State<Arc<AppState>>) -> Json<Vec<SessionInfo>> {
    let all: Vec<Shared> = st.sessions.read().expect("session map lock").values().cloned().collect();
    Json(all.iter().map(|s| lock(s).info()).collect())
}

async fn session_info(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionInfo>, ApiError> {
    Ok(Json(lock(&st.session(&id)?).info()))
}

fn training_response<T: serde::Serialize>(body: T) -> Response {
    (
        StatusCode::ACCEPTED,
        [(header::RETRY_AFTER, RETRY_AFTER_S.to_string())],
        Json(body),
    )
        .into_response()
}

async fn batch(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let s = st.session(&id)?;
    let s = lock(&s);
    let body = s.batch();
    Ok(match s.state() {
        SessionState::Training => training_response(body),
        _ => Json(body).into_response(),
    })
}

async fn submit_labels(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: LabelsRequest = parse_body(&body)?;
    let shared = st.session(&id)?;
    let mut s = lock(&shared);
    let entries = s.validate_labels(&req)?;
    st.record(&Event::Labels {
        session_id: id.clone(),
        labels: entries.clone(),
    })?;
    let complete = s.apply_labels(&entries);
    let mut body = LabelsResponse {
        api_version: API_VERSION,
        session_id: id,
        state: s.state(),
        accepted: entries.len(),
        remaining: s.remaining(),
    };
    let Some(labels) = complete else {
        return Ok(Json(body).into_response());
    };
    let mut learner = s.begin_training();
    body.state = s.state();
    body.remaining = 0;
    drop(s);
    let session = shared.clone();
    tokio::task::spawn_blocking(move || {
        let outcome = learner.complete_batch(&labels).map(|_| ()).map_err(|e| e.to_string());
        lock(&session).end_training(learner, outcome);
    });
    Ok(training_response(body))
}

async fn progress(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<ProgressResponse>, ApiError> {
    Ok(Json(lock(&st.session(&id)?).progress()))
}

async fn export(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let csv = lock(&st.session(&id)?).export_csv()?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
