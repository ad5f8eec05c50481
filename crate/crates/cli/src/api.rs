//! HTTP service. Requests carry everything they need; traces are read from
//! the store and checks run in the background behind a polling endpoint.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::docs::*;
use crate::error::{AppError, ErrorDoc};
use crate::ops;
use crate::store::TraceStore;

pub struct AppState {
    pub store: TraceStore,
    jobs: Mutex<HashMap<String, CheckStatus>>,
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match self {
            AppError::Load(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AppError::BadRequest(_) => StatusCode::BAD_REQUEST,
            AppError::NotFound(_) => StatusCode::NOT_FOUND,
            AppError::Io(_) | AppError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        json_response(status, &ErrorDoc { error: self.body() })
    }
}

fn json_response<T: Serialize>(status: StatusCode, doc: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], to_json(doc)).into_response()
}

fn ok<T: Serialize>(doc: &T) -> Response {
    json_response(StatusCode::OK, doc)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, AppError> {
    serde_json::from_slice(bytes).map_err(|e| AppError::BadRequest(format!("request body: {e}")))
}

pub fn router(store: TraceStore) -> Router {
    let state = Arc::new(AppState { store, jobs: Mutex::new(HashMap::new()) });
    Router::new()
        .route("/v1/checks", post(submit_check))
        .route("/v1/checks/:job", get(check_status))
        .route("/v1/traces/:id", get(trace_meta))
        .route("/v1/traces/:id/states/:index", get(trace_state))
        .route("/v1/traces/:id/slice", post(slice))
        .route("/v1/graph", post(graph))
        .with_state(state)
}

/// Identical requests share a job, and through content addressing a trace.
fn job_id(req: &CheckRequest) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(req).expect("request serialises")))
}

async fn submit_check(State(app): State<Arc<AppState>>, bytes: Bytes) -> Result<Response, AppError> {
    let req: CheckRequest = body(&bytes)?;
    let id = job_id(&req);
    {
        let mut jobs = app.jobs.lock().expect("jobs lock");
        if let Some(s) = jobs.get(&id) {
            return Ok(json_response(StatusCode::ACCEPTED, s));
        }
        jobs.insert(id.clone(), CheckStatus { job_id: id.clone(), status: "running".into(), verdict: None, error: None });
    }
    let worker = app.clone();
    let job = id.clone();
    tokio::task::spawn_blocking(move || {
        let status = match ops::check(&worker.store, "spec", &req) {
            Ok(v) => CheckStatus { job_id: job.clone(), status: "done".into(), verdict: Some(v), error: None },
            Err(e) => CheckStatus { job_id: job.clone(), status: "failed".into(), verdict: None, error: Some(e.body()) },
        };
        worker.jobs.lock().expect("jobs lock").insert(job, status);
    });
    let s = CheckStatus { job_id: id, status: "running".into(), verdict: None, error: None };
    Ok(json_response(StatusCode::ACCEPTED, &s))
}

async fn check_status(State(app): State<Arc<AppState>>, Path(job): Path<String>) -> Result<Response, AppError> {
    let jobs = app.jobs.lock().expect("jobs lock");
    jobs.get(&job).map(ok).ok_or_else(|| AppError::NotFound(format!("check {job}")))
}

async fn trace_meta(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, AppError> {
    let entry = app.store.entry(&id)?;
    let trace = app.store.load(&id)?;
    Ok(ok(&ops::meta(&entry, &trace)))
}

async fn trace_state(State(app): State<Arc<AppState>>, Path((id, index)): Path<(String, String)>) -> Result<Response, AppError> {
    let trace = app.store.load(&id)?;
    let index = ops::select_state(&trace, &index).map_err(|_| AppError::NotFound(format!("state {index} of trace {id}")))?;
    Ok(ok(&ops::state(&id, &trace, index)?))
}

async fn slice(State(app): State<Arc<AppState>>, Path(id): Path<String>, bytes: Bytes) -> Result<Response, AppError> {
    let req: SliceRequest = body(&bytes)?;
    let trace = app.store.load(&id)?;
    let doc = tokio::task::spawn_blocking(move || ops::slice(&id, &trace, &req))
        .await
        .map_err(|e| AppError::Internal(e.to_string()))??;
    Ok(ok(&doc))
}

async fn graph(bytes: Bytes) -> Result<Response, AppError> {
    let req: GraphRequest = body(&bytes)?;
    Ok(ok(&ops::graph("spec", &req.spec)?))
}
