//! Minimal HTTP endpoint serving cited answers.
//!
//! Stateless per request: POST /v1/answer runs the configured pipeline on one
//! question, GET /v1/doc/{doc_id} resolves any cited document, GET /healthz
//! reports liveness.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use citedqa::pipeline::Pipeline;
use citedqa::Error as CoreError;

pub struct ServiceState {
    pub pipeline: Pipeline,
}

#[derive(Serialize)]
struct CitationView {
    doc_id: String,
    title: String,
}

#[derive(Serialize)]
struct StatementView {
    text: String,
    citations: Vec<CitationView>,
}

#[derive(Serialize)]
struct AnswerView {
    polar: citedqa::answer::PolarAnswer,
    statements: Vec<StatementView>,
}

fn error_body(message: impl Into<String>) -> Json<serde_json::Value> {
    Json(serde_json::json!({"error": message.into()}))
}

/// Upstream model failures surface as 502; everything else unexpected is 500.
fn answer_error_response(error: CoreError) -> Response {
    let root = match &error {
        CoreError::Question { source, .. } => source.as_ref(),
        other => other,
    };
    let status = match root {
        CoreError::ReplayMiss { .. }
        | CoreError::HttpStatus { .. }
        | CoreError::Transport(_)
        | CoreError::RetriesExhausted { .. } => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, error_body(error.to_string())).into_response()
}

async fn healthz() -> &'static str {
    "ok"
}

async fn get_doc(
    State(state): State<Arc<ServiceState>>,
    Path(doc_id): Path<String>,
) -> Response {
    match state.pipeline.services().corpus.get(&doc_id) {
        Ok(doc) => Json(doc).into_response(),
        Err(CoreError::DocumentNotFound { doc_id }) => (
            StatusCode::NOT_FOUND,
            error_body(format!("document not found: {doc_id}")),
        )
            .into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, error_body(e.to_string())).into_response(),
    }
}

async fn post_answer(
    State(state): State<Arc<ServiceState>>,
    body: Result<Json<serde_json::Value>, axum::extract::rejection::JsonRejection>,
) -> Response {
    let Ok(Json(body)) = body else {
        return (StatusCode::BAD_REQUEST, error_body("body must be JSON")).into_response();
    };
    let Some(question) = body.get("question").and_then(|q| q.as_str()) else {
        return (
            StatusCode::BAD_REQUEST,
            error_body("body must contain a string field `question`"),
        )
            .into_response();
    };
    if question.trim().is_empty() {
        return (StatusCode::BAD_REQUEST, error_body("question must be nonempty")).into_response();
    }
    let question_id = "service";
    match state.pipeline.run_question(question_id, question, None).await {
        Ok((answer, _log)) => {
            let corpus = &state.pipeline.services().corpus;
            let statements = answer
                .statements
                .iter()
                .map(|s| StatementView {
                    text: s.text.clone(),
                    citations: s
                        .citations
                        .iter()
                        .map(|doc_id| CitationView {
                            doc_id: doc_id.clone(),
                            title: corpus.get(doc_id).map(|d| d.title).unwrap_or_default(),
                        })
                        .collect(),
                })
                .collect();
            Json(AnswerView {
                polar: answer.polar,
                statements,
            })
            .into_response()
        }
        Err(e) => answer_error_response(e),
    }
}

pub fn build_router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/doc/{doc_id}", get(get_doc))
        .route("/v1/answer", post(post_answer))
        .with_state(state)
}
