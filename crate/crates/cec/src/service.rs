//! HTTP reward service.
//!
//! | method | path          | body                                              |
//! |--------|---------------|---------------------------------------------------|
//! | GET    | `/healthz`    |                                                   |
//! | POST   | `/v1/reward`  | `{"reference", "candidates", "params"?}`          |
//! | POST   | `/v1/perturb` | `{"sentences", "ops"?, "outputs_per_sentence"?, "edit_rate"?, "seed"?}` |
//! | POST   | `/v1/evaluate`| `{"triples": [{"source", "reference", "prediction"}]}` |
//!
//! Until tables and the embedder are ready every route answers 503.

use std::sync::{Arc, OnceLock};

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cec_core::{evaluate_corpus, generate_pairs, ConfusionTables, EmbedError, Embedder, RewardError, RewardParams};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;

use crate::config::AppConfig;
use crate::wire::{ErrorBody, EvaluateRequest, PerturbRequest, PerturbResponse, RewardRequest};

/// Upper bound on pairs a single perturb request may ask for.
pub const MAX_PERTURB_OUTPUTS: usize = 100_000;

/// Seconds suggested to clients when the embedder is unavailable.
pub const RETRY_AFTER_SECS: u64 = 5;

pub struct Ready {
    pub tables: ConfusionTables,
    pub embedder: Box<dyn Embedder>,
}

pub struct AppState {
    params: RewardParams,
    ready: OnceLock<Ready>,
}

impl AppState {
    pub fn pending(params: RewardParams) -> Arc<Self> {
        Arc::new(AppState { params, ready: OnceLock::new() })
    }

    pub fn ready(params: RewardParams, tables: ConfusionTables, embedder: Box<dyn Embedder>) -> Arc<Self> {
        let state = Self::pending(params);
        state.mark_ready(tables, embedder);
        state
    }

    /// Returns false if the state was already initialized.
    pub fn mark_ready(&self, tables: ConfusionTables, embedder: Box<dyn Embedder>) -> bool {
        self.ready.set(Ready { tables, embedder }).is_ok()
    }

    pub fn is_ready(&self) -> bool {
        self.ready.get().is_some()
    }

    pub fn params(&self) -> &RewardParams {
        &self.params
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
    retry_after: bool,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody::new(code, message), retry_after: false }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn unavailable(code: &str, message: impl Into<String>) -> Self {
        ApiError { retry_after: true, ..Self::new(StatusCode::SERVICE_UNAVAILABLE, code, message) }
    }
}

impl From<RewardError> for ApiError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::EmptyInput => ApiError::bad_request("empty_candidates", e.to_string()),
            RewardError::InvalidParams(_) => ApiError::bad_request("invalid_params", e.to_string()),
            RewardError::Embed(EmbedError::RemoteUnavailable(_)) => {
                ApiError::unavailable("embedder_unavailable", e.to_string())
            }
            RewardError::Embed(EmbedError::RemoteShape(_)) => {
                ApiError::new(StatusCode::BAD_GATEWAY, "embedder_bad_response", e.to_string())
            }
            RewardError::Embed(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "embedding_failed", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::warn!(status = %self.status, code = %self.body.error.code, "{}", self.body.error.message);
        }
        let mut response = (self.status, Json(self.body)).into_response();
        if self.retry_after {
            response.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(RETRY_AFTER_SECS));
        }
        response
    }
}

fn parse<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = body.map_err(|r| ApiError::new(r.status(), "unreadable_body", r.body_text()))?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

fn ready(state: &AppState) -> Result<&Ready, ApiError> {
    state.ready.get().ok_or_else(|| ApiError::unavailable("not_ready", "service is starting"))
}

/// Run CPU- or IO-heavy work off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    if state.is_ready() {
        Json(serde_json::json!({"status": "ok"})).into_response()
    } else {
        ApiError::unavailable("not_ready", "service is starting").into_response()
    }
}

async fn reward(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> Response {
    let run = async {
        let request: RewardRequest = parse(body)?;
        ready(&state)?;
        let state = state.clone();
        blocking(move || {
            let ready = ready(&state)?;
            Ok(request.score(&state.params, ready.embedder.as_ref())?)
        })
        .await
    };
    match run.await {
        Ok(response) => Json(response).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn perturb(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> Response {
    let run = async {
        let request: PerturbRequest = parse(body)?;
        let spec = request.spec().map_err(|e| ApiError::bad_request("invalid_spec", e))?;
        let requested = request.sentences.len().saturating_mul(spec.per_sentence_outputs);
        if requested > MAX_PERTURB_OUTPUTS {
            return Err(ApiError::bad_request(
                "too_many_outputs",
                format!("request asks for {requested} pairs; the limit is {MAX_PERTURB_OUTPUTS}"),
            ));
        }
        ready(&state)?;
        let state = state.clone();
        blocking(move || {
            let ready = ready(&state)?;
            let (pairs, report) = generate_pairs(&request.corpus(), &spec, &ready.tables)
                .map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
            Ok(PerturbResponse { pairs, report })
        })
        .await
    };
    match run.await {
        Ok(response) => Json(response).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn evaluate(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> Response {
    let run = async {
        let request: EvaluateRequest = parse(body)?;
        ready(&state)?;
        blocking(move || Ok(evaluate_corpus(&request.triples))).await
    };
    match run.await {
        Ok(report) => Json(report).into_response(),
        Err(e) => e.into_response(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/reward", post(reward))
        .route("/v1/perturb", post(perturb))
        .route("/v1/evaluate", post(evaluate))
        .with_state(state)
}

fn initialize(cfg: &AppConfig) -> Result<Ready> {
    let tables = cfg.tables.load().context("loading confusion tables")?;
    let embedder = cfg.embedder.build().context("building embedder")?;
    Ok(Ready { tables, embedder })
}

/// Bind, initialize and serve until Ctrl-C. Initialization failures stop
/// the server and are returned.
pub async fn serve(cfg: AppConfig) -> Result<()> {
    let listener = TcpListener::bind(&cfg.listen_addr).await.with_context(|| format!("binding {}", cfg.listen_addr))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");

    let state = AppState::pending(cfg.reward);
    let (fail_tx, fail_rx) = tokio::sync::oneshot::channel::<anyhow::Error>();
    let init_state = state.clone();
    tokio::task::spawn_blocking(move || match initialize(&cfg) {
        Ok(ready) => {
            init_state.mark_ready(ready.tables, ready.embedder);
            tracing::info!("ready");
        }
        Err(e) => {
            let _ = fail_tx.send(e);
        }
    });

    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let failure = tokio::spawn(async move {
        // a dropped sender means initialization succeeded
        let init_failed = async {
            match fail_rx.await {
                Ok(e) => e,
                Err(_) => std::future::pending().await,
            }
        };
        let outcome = tokio::select! {
            e = init_failed => Some(e),
            _ = tokio::signal::ctrl_c() => {
                tracing::info!("shutting down");
                None
            }
        };
        let _ = stop_tx.send(());
        outcome
    });

    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = stop_rx.await;
        })
        .await?;

    match failure.await? {
        Some(e) => Err(e.context("startup failed")),
        None => Ok(()),
    }
}
