//! HTTP routes over a shared [`Project`].

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::services::{ServeDir, ServeFile};

use crate::config::LabelDefinition;
use crate::error::{ApiError, Result};
use crate::project::{Acknowledgement, NextTask, Principal, Progress, Project};

pub type Shared = Arc<Project>;

#[derive(Debug, Deserialize)]
pub struct RaterQuery {
    pub rater: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RatingRequest {
    pub task_id: String,
    pub label: String,
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn principal(project: &Project, headers: &HeaderMap) -> Result<Principal> {
    project.authenticate(bearer(headers))
}

async fn next_task(
    State(project): State<Shared>,
    headers: HeaderMap,
    Query(q): Query<RaterQuery>,
) -> Result<Json<NextTask>> {
    let who = principal(&project, &headers)?;
    Ok(Json(project.next_task(&who, q.rater.as_deref())?))
}

async fn submit(
    State(project): State<Shared>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Json<Acknowledgement>> {
    let who = principal(&project, &headers)?;
    let req: RatingRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::Validation(format!("body must be {{task_id, label}}: {e}")))?;
    // the log fsyncs, so keep it off the async workers
    let ack = tokio::task::spawn_blocking(move || project.submit(&who, &req.task_id, &req.label))
        .await
        .map_err(|e| ApiError::storage("submission worker", e))??;
    Ok(Json(ack))
}

async fn progress(
    State(project): State<Shared>,
    headers: HeaderMap,
    Query(q): Query<RaterQuery>,
) -> Result<Json<Vec<Progress>>> {
    let who = principal(&project, &headers)?;
    Ok(Json(project.progress(&who, q.rater.as_deref())?))
}

async fn export(State(project): State<Shared>, headers: HeaderMap) -> Result<Response> {
    let who = principal(&project, &headers)?;
    let body = project.export_jsonl(&who)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-ndjson; charset=utf-8"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"annotations.jsonl\""),
        ],
        body,
    )
        .into_response())
}

async fn rubric(State(project): State<Shared>, headers: HeaderMap) -> Result<Json<Vec<LabelDefinition>>> {
    principal(&project, &headers)?;
    Ok(Json(project.rubric().to_vec()))
}

async fn unknown_api() -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}

/// API routes, plus the rating UI's static bundle when `static_dir` is given.
pub fn router(project: Shared, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/tasks/next", get(next_task))
        .route("/ratings", post(submit))
        .route("/progress", get(progress))
        .route("/export", get(export))
        .route("/rubric", get(rubric))
        .fallback(unknown_api)
        .with_state(project);
    let app = Router::new().nest("/api", api);
    match static_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => app,
    }
}

/// Serves until interrupted.
pub async fn serve(listener: tokio::net::TcpListener, project: Shared, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(project, static_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
