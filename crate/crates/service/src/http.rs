//! JSON-over-HTTP front end.
//!
//! `POST /classify/{lang}` takes a [`ClassifyRequest`] and answers with an
//! ordered `label → score` object; `GET /health` and `GET /models` report
//! liveness and the loaded bundles.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use crate::bundle::{BundleInfo, ClassifyRequest, ClassifyResponse, ModelBundle};
use crate::error::ServiceError;

/// Loaded bundles keyed by language.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    bundles: Arc<BTreeMap<String, Arc<ModelBundle>>>,
}

impl AppState {
    pub fn new(bundles: impl IntoIterator<Item = ModelBundle>) -> Self {
        let map = bundles
            .into_iter()
            .map(|b| (b.language().to_owned(), Arc::new(b)))
            .collect();
        Self {
            bundles: Arc::new(map),
        }
    }

    pub fn bundle(&self, language: &str) -> Option<&Arc<ModelBundle>> {
        self.bundles.get(language)
    }

    pub fn infos(&self) -> Vec<BundleInfo> {
        self.bundles.values().map(|b| b.info()).collect()
    }
}

/// An error rendered as `{"error": "..."}` with its status code.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(err: ServiceError) -> Self {
        let status = match &err {
            ServiceError::EmptyText => StatusCode::BAD_REQUEST,
            ServiceError::UnsupportedLanguage { .. } | ServiceError::NotRegistered(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::TooManyLabels { .. } | ServiceError::ZeroLabels => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/classify/{lang}", post(classify))
        .route("/health", get(health))
        .route("/models", get(models))
        .with_state(state)
}

async fn classify(
    State(state): State<AppState>,
    Path(lang): Path<String>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> Result<Json<ClassifyResponse>, ApiError> {
    let bundle = state.bundle(&lang).ok_or_else(|| {
        let err = match crate::registry::validate_language(&lang) {
            Err(e) => e,
            Ok(()) => ServiceError::NotRegistered(lang.clone()),
        };
        ApiError::from(err)
    })?;
    let Json(request) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    Ok(Json(bundle.classify(&request)?))
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "models": state.bundles.len() }))
}

async fn models(State(state): State<AppState>) -> Json<Vec<BundleInfo>> {
    Json(state.infos())
}

/// Serves `state` on `addr` until Ctrl-C.
pub async fn serve(state: AppState, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
