//! HTTP+JSON routes.
//!
//! | method | path                     | body                                  |
//! |--------|--------------------------|---------------------------------------|
//! | POST   | `/sessions`              | `{labels, config?, seed?}` -> `{id, seed, question}` |
//! | GET    | `/sessions/{id}/question`| `{i, j, label_i, label_j, progress, questions_asked, seq}` |
//! | POST   | `/sessions/{id}/answer`  | `{lesser, seq?}` -> `{status, progress, questions_asked, question}` |
//! | GET    | `/sessions/{id}/result`  | `{ranking, final, confidence, questions_asked, status}` |
//! | GET    | `/sessions/{id}/trace`   | engine trace CSV                      |
//!
//! Errors are `{error, detail}` with 400, 404, 409 or 500.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::api::{
    AnswerRequest, AnswerResponse, CreateSessionRequest, CreateSessionResponse, QuestionView, ResultView,
};
use crate::{ServiceError, SessionStore};

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/question", get(question))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/result", get(result))
        .route("/sessions/{id}/trace", get(trace))
        .with_state(store)
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    b.map(|Json(t)| t)
        .map_err(|e| ServiceError::validation("body", e.body_text()))
}

// engine updates are CPU work; keep them off the async workers
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

async fn create(
    State(store): State<Arc<SessionStore>>,
    req: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<Json<CreateSessionResponse>, ServiceError> {
    let req = body(req)?;
    blocking(move || store.create(req)).await.map(Json)
}

async fn question(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<QuestionView>, ServiceError> {
    blocking(move || store.question(&id)).await.map(Json)
}

async fn answer(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    req: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<AnswerResponse>, ServiceError> {
    let req = body(req)?;
    blocking(move || store.answer(&id, req.lesser, req.seq)).await.map(Json)
}

async fn result(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<ResultView>, ServiceError> {
    blocking(move || store.result(&id)).await.map(Json)
}

async fn trace(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    let csv = blocking(move || store.trace_csv(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}

/// Serves the API until ctrl-c.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
