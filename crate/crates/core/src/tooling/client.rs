//! Async HTTP client for the verification server API.

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::enrollment::Progress;
use crate::server::config::{ConfigDelta, SystemConfig};
use crate::server::http::{
    AuthorizeRequest, EnrollRequest, ErrorBody, UsernameRequest, VerifyRequest,
    ADMIN_TOKEN_HEADER,
};
use crate::server::service::{
    AttestRequest, AttestResponse, AuthorizeResponse, ChallengeResponse, StatusResponse,
    VerifyResponse,
};
use crate::server::store::UserSummary;
use crate::server::txlog::TransactionRecord;
use crate::signal::RawCapture;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{code} ({status}): {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
    #[error("cannot decode response: {0}")]
    Decode(String),
}

impl ClientError {
    /// Server error code, if the server answered with one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }

    pub fn is_connect(&self) -> bool {
        matches!(self, ClientError::Transport(e) if e.is_connect())
    }
}

/// Raw status and body of a response.
#[derive(Debug, Clone)]
pub struct RawResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl RawResponse {
    pub fn error_code(&self) -> Option<String> {
        serde_json::from_slice::<ErrorBody>(&self.body)
            .ok()
            .map(|b| b.error)
    }
}

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
    admin_token: Option<String>,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
            admin_token: None,
        }
    }

    pub fn with_admin_token(mut self, token: impl Into<String>) -> Self {
        self.admin_token = Some(token.into());
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn call<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: Option<&B>,
    ) -> Result<T, ClientError> {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(t) = &self.admin_token {
            req = req.header(ADMIN_TOKEN_HEADER, t);
        }
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        decode(resp.status(), &resp.bytes().await?)
    }

    /// Sends `body` verbatim. Used to resubmit byte-identical requests.
    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> Result<RawResponse, ClientError> {
        let mut req = self
            .http
            .post(format!("{}{}", self.base, path))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body);
        if let Some(t) = &self.admin_token {
            req = req.header(ADMIN_TOKEN_HEADER, t);
        }
        let resp = req.send().await?;
        Ok(RawResponse {
            status: resp.status().as_u16(),
            body: resp.bytes().await?.to_vec(),
        })
    }

    pub async fn authorize(
        &self,
        username: &str,
        display_name: Option<&str>,
    ) -> Result<AuthorizeResponse, ClientError> {
        let body = AuthorizeRequest {
            username: username.to_string(),
            display_name: display_name.map(str::to_string),
        };
        self.call(Method::POST, "/api/v1/admin/authorize", Some(&body))
            .await
    }

    pub async fn users(&self) -> Result<Vec<UserSummary>, ClientError> {
        self.call::<(), _>(Method::GET, "/api/v1/admin/users", None)
            .await
    }

    pub async fn unblock(&self, username: &str) -> Result<UserSummary, ClientError> {
        let body = UsernameRequest {
            username: username.to_string(),
        };
        self.call(Method::POST, "/api/v1/admin/unblock", Some(&body))
            .await
    }

    pub async fn get_config(&self) -> Result<SystemConfig, ClientError> {
        self.call::<(), _>(Method::GET, "/api/v1/admin/config", None)
            .await
    }

    pub async fn set_config(&self, delta: &ConfigDelta) -> Result<SystemConfig, ClientError> {
        self.call(Method::PUT, "/api/v1/admin/config", Some(delta))
            .await
    }

    pub async fn transactions(&self, last: usize) -> Result<Vec<TransactionRecord>, ClientError> {
        self.call::<(), _>(
            Method::GET,
            &format!("/api/v1/admin/transactions?last={last}"),
            None,
        )
        .await
    }

    pub async fn challenge(&self, username: &str) -> Result<ChallengeResponse, ClientError> {
        let body = UsernameRequest {
            username: username.to_string(),
        };
        self.call(Method::POST, "/api/v1/challenge", Some(&body))
            .await
    }

    pub async fn enroll(
        &self,
        username: &str,
        temp_password: &str,
        nonce: &str,
        sample: &RawCapture,
    ) -> Result<Progress, ClientError> {
        let body = EnrollRequest {
            username: username.to_string(),
            temp_password: temp_password.to_string(),
            sample: sample.clone(),
            nonce: nonce.to_string(),
        };
        self.call(Method::POST, "/api/v1/enroll", Some(&body)).await
    }

    pub async fn enroll_status(&self, username: &str) -> Result<StatusResponse, ClientError> {
        let url = reqwest::Url::parse_with_params(
            &format!("{}/api/v1/enroll/status", self.base),
            &[("username", username)],
        )
        .map_err(|e| ClientError::Decode(e.to_string()))?;
        let resp = self.http.get(url).send().await?;
        decode(resp.status(), &resp.bytes().await?)
    }

    pub async fn verify(
        &self,
        username: &str,
        nonce: &str,
        sample: &RawCapture,
    ) -> Result<VerifyResponse, ClientError> {
        let body = verify_body(username, nonce, sample);
        self.call(Method::POST, "/api/v1/verify", Some(&body)).await
    }

    /// Challenge followed by verify.
    pub async fn verify_fresh(
        &self,
        username: &str,
        sample: &RawCapture,
    ) -> Result<VerifyResponse, ClientError> {
        let c = self.challenge(username).await?;
        self.verify(username, &c.nonce, sample).await
    }

    pub async fn attest(&self, req: &AttestRequest) -> Result<AttestResponse, ClientError> {
        self.call(Method::POST, "/api/v1/edge/attest", Some(req))
            .await
    }
}

pub fn verify_body(username: &str, nonce: &str, sample: &RawCapture) -> VerifyRequest {
    VerifyRequest {
        username: username.to_string(),
        sample: sample.clone(),
        nonce: nonce.to_string(),
    }
}

fn decode<T: DeserializeOwned>(status: StatusCode, body: &[u8]) -> Result<T, ClientError> {
    if status.is_success() {
        return serde_json::from_slice(body).map_err(|e| ClientError::Decode(e.to_string()));
    }
    match serde_json::from_slice::<ErrorBody>(body) {
        Ok(b) => Err(ClientError::Api {
            status: status.as_u16(),
            code: b.error,
            message: b.message,
        }),
        Err(_) => Err(ClientError::Api {
            status: status.as_u16(),
            code: "Http".to_string(),
            message: String::from_utf8_lossy(body).into_owned(),
        }),
    }
}
