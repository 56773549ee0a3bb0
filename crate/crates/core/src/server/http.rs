//! HTTP transport for [`AccessService`].
//!
//! Handlers decode bodies themselves so that malformed requests still reach
//! the service and get their transaction record. Service calls run on the
//! blocking pool: they take per-user locks and run the matcher.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::config::ConfigDelta;
use super::service::{AccessService, AttestRequest, ServiceError, ServiceResult};
use super::txlog::TxKind;
use crate::signal::RawCapture;

pub const ADMIN_TOKEN_HEADER: &str = "x-admin-token";

/// Default number of records returned by the transactions endpoint.
pub const DEFAULT_TRANSACTION_TAIL: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuthorizeRequest {
    pub username: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsernameRequest {
    pub username: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrollRequest {
    pub username: String,
    pub temp_password: String,
    pub sample: RawCapture,
    pub nonce: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub username: String,
    pub sample: RawCapture,
    pub nonce: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

type Svc = Arc<AccessService>;

pub fn router(service: Svc) -> Router {
    Router::new()
        .route("/api/v1/admin/authorize", post(authorize))
        .route("/api/v1/admin/users", get(list_users))
        .route("/api/v1/admin/unblock", post(unblock))
        .route("/api/v1/admin/config", get(get_config).put(put_config))
        .route("/api/v1/admin/transactions", get(transactions))
        .route("/api/v1/enroll", post(enroll))
        .route("/api/v1/enroll/status", get(enroll_status))
        .route("/api/v1/challenge", post(challenge))
        .route("/api/v1/verify", post(verify))
        .route("/api/v1/edge/attest", post(edge_attest))
        .with_state(service)
}

fn admin_token(headers: &HeaderMap) -> Option<String> {
    headers
        .get(ADMIN_TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

fn error_response(e: &ServiceError) -> Response {
    let status = StatusCode::from_u16(e.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let body = ErrorBody {
        error: e.code().to_string(),
        message: e.to_string(),
    };
    (status, Json(body)).into_response()
}

async fn run<T, F>(f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> ServiceResult<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => (StatusCode::OK, Json(v)).into_response(),
        Ok(Err(e)) => error_response(&e),
        Err(join) => error_response(&ServiceError::Internal(join.to_string())),
    }
}

/// Best-effort username for logging a request whose body did not decode.
fn username_hint(body: &[u8]) -> String {
    serde_json::from_slice::<serde_json::Value>(body)
        .ok()
        .and_then(|v| v.get("username").and_then(|u| u.as_str()).map(str::to_string))
        .unwrap_or_else(|| "-".to_string())
}

fn decode<T: DeserializeOwned>(svc: &AccessService, kind: TxKind, body: &[u8]) -> ServiceResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        svc.reject_request(kind, &username_hint(body), ServiceError::BadRequest(e.to_string()))
    })
}

async fn authorize(State(svc): State<Svc>, headers: HeaderMap, body: Bytes) -> Response {
    let admin = admin_token(&headers);
    run(move || {
        let req: AuthorizeRequest = decode(&svc, TxKind::Authorize, &body)?;
        svc.authorize(admin.as_deref(), &req.username, req.display_name.as_deref())
    })
    .await
}

async fn list_users(State(svc): State<Svc>, headers: HeaderMap) -> Response {
    let admin = admin_token(&headers);
    run(move || svc.list_users(admin.as_deref())).await
}

async fn unblock(State(svc): State<Svc>, headers: HeaderMap, body: Bytes) -> Response {
    let admin = admin_token(&headers);
    run(move || {
        let req: UsernameRequest = decode(&svc, TxKind::Admin, &body)?;
        svc.unblock(admin.as_deref(), &req.username)
    })
    .await
}

async fn get_config(State(svc): State<Svc>, headers: HeaderMap) -> Response {
    let admin = admin_token(&headers);
    run(move || svc.get_config(admin.as_deref())).await
}

async fn put_config(State(svc): State<Svc>, headers: HeaderMap, body: Bytes) -> Response {
    let admin = admin_token(&headers);
    run(move || {
        let delta: ConfigDelta = decode(&svc, TxKind::Admin, &body).map_err(|e| match e {
            ServiceError::BadRequest(m) => ServiceError::Config(
                super::config::ConfigError::Invalid(m),
            ),
            other => other,
        })?;
        svc.set_config(admin.as_deref(), &delta)
    })
    .await
}

async fn transactions(
    State(svc): State<Svc>,
    headers: HeaderMap,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Response {
    let admin = admin_token(&headers);
    run(move || {
        let last = match query.as_ref().ok().and_then(|q| q.get("last").cloned()) {
            None => DEFAULT_TRANSACTION_TAIL,
            Some(s) => s.parse::<usize>().map_err(|_| {
                svc.reject_request(
                    TxKind::Admin,
                    "-",
                    ServiceError::BadRequest(format!("last must be a count, got {s:?}")),
                )
            })?,
        };
        svc.read_transactions(admin.as_deref(), last)
    })
    .await
}

async fn enroll(State(svc): State<Svc>, headers: HeaderMap, body: Bytes) -> Response {
    let admin = admin_token(&headers);
    run(move || {
        let req: EnrollRequest = decode(&svc, TxKind::EnrollSample, &body)?;
        svc.submit_enrollment_sample(
            admin.as_deref(),
            &req.username,
            &req.temp_password,
            &req.nonce,
            req.sample,
        )
    })
    .await
}

async fn enroll_status(
    State(svc): State<Svc>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Response {
    run(move || {
        let username = query.as_ref().ok().and_then(|q| q.get("username").cloned());
        match username {
            Some(u) => svc.enrollment_status(&u),
            None => Err(svc.reject_request(
                TxKind::Status,
                "-",
                ServiceError::BadRequest("username query parameter required".into()),
            )),
        }
    })
    .await
}

async fn challenge(State(svc): State<Svc>, body: Bytes) -> Response {
    run(move || {
        let req: UsernameRequest = decode(&svc, TxKind::Challenge, &body)?;
        svc.issue_challenge(&req.username)
    })
    .await
}

async fn verify(State(svc): State<Svc>, body: Bytes) -> Response {
    run(move || {
        let req: VerifyRequest = decode(&svc, TxKind::Verify, &body)?;
        svc.verify(&req.username, &req.nonce, req.sample)
    })
    .await
}

async fn edge_attest(State(svc): State<Svc>, body: Bytes) -> Response {
    run(move || {
        let req: AttestRequest = decode(&svc, TxKind::EdgeAttest, &body)?;
        svc.edge_attest(&req)
    })
    .await
}

/// Serves until `shutdown` resolves. A background task sweeps expired nonces.
pub async fn serve(
    service: Svc,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let sweeper = {
        let svc = Arc::clone(&service);
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(StdDuration::from_secs(30));
            loop {
                tick.tick().await;
                svc.sweep_nonces();
            }
        })
    };
    let result = axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await;
    sweeper.abort();
    result
}

/// A server running on the current tokio runtime.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    join: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match (&mut self.join).await {
            Ok(r) => r,
            Err(e) => Err(std::io::Error::other(e)),
        }
    }
}

/// Binds `addr` (use port 0 for an ephemeral port) and serves in the
/// background.
pub async fn spawn(service: Svc, addr: &str) -> std::io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel();
    let join = tokio::spawn(serve(service, listener, async {
        let _ = rx.await;
    }));
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        join,
    })
}
