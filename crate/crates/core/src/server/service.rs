//! The verification server's state and operations, independent of transport.
//!
//! Every public operation appends exactly one record to the transaction log,
//! whether it succeeds or fails. Mutations of one user's document happen
//! under that user's lock and are persisted before they become visible.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use thiserror::Error;

use super::config::{ConfigDelta, ConfigError, SystemConfig, UpdateRule};
use super::store::{
    valid_username, write_atomic, Store, StoreError, UserDocument, UserRecord, UserSummary,
};
use super::txlog::{TransactionLog, TransactionRecord, TxEntry, TxKind, TxOutcome};
use crate::clock::{Clock, SystemClock};
use crate::enrollment::{generate_temp_password, EnrollError, EnrollmentState, Progress};
use crate::matcher::{update_model, DtwMatcher, MatchError, Matcher};
use crate::security::nonce::{NonceError, NonceTable};
use crate::security::terminal::{
    mac_message, Decision, TerminalError, TerminalIdentity, TerminalRegistry,
};
use crate::signal::{featurize, parse_sample, RawCapture, SampleError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("administrator credential missing or wrong")]
    NotAdmin,
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("user {0:?} already exists")]
    DuplicateUser(String),
    #[error("invalid username {0:?}")]
    InvalidUsername(String),
    #[error("user has not completed enrollment")]
    NotEnrolled,
    #[error("user is blocked")]
    UserBlocked,
    #[error("user is not blocked")]
    NotBlocked,
    #[error(transparent)]
    Nonce(#[from] NonceError),
    #[error(transparent)]
    Terminal(#[from] TerminalError),
    #[error(transparent)]
    Enroll(#[from] EnrollError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<MatchError> for ServiceError {
    fn from(e: MatchError) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl ServiceError {
    /// Stable error code, used on the wire and in the log.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotAdmin => "NotAdmin",
            ServiceError::UnknownUser(_) => "UnknownUser",
            ServiceError::DuplicateUser(_) => "DuplicateUser",
            ServiceError::InvalidUsername(_) => "InvalidUsername",
            ServiceError::NotEnrolled => "NotEnrolled",
            ServiceError::UserBlocked => "UserBlocked",
            ServiceError::NotBlocked => "NotBlocked",
            ServiceError::Nonce(NonceError::ReplayDetected) => "ReplayDetected",
            ServiceError::Nonce(NonceError::NonceExpired) => "NonceExpired",
            ServiceError::Nonce(NonceError::NonceUnknown) => "NonceUnknown",
            ServiceError::Terminal(TerminalError::UnknownTerminal) => "UnknownTerminal",
            ServiceError::Terminal(TerminalError::BadMac) => "BadMac",
            ServiceError::Enroll(EnrollError::BadTempPassword) => "BadTempPassword",
            ServiceError::Enroll(EnrollError::SessionGapNotElapsed { .. }) => {
                "SessionGapNotElapsed"
            }
            ServiceError::Enroll(EnrollError::AlreadyEnrolled) => "AlreadyEnrolled",
            ServiceError::Enroll(EnrollError::Model(_)) => "Internal",
            ServiceError::Sample(e) => e.code(),
            ServiceError::Config(ConfigError::Invalid(_)) => "InvalidConfig",
            ServiceError::Config(_) => "Internal",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Store(StoreError::Corrupt { .. }) => "CorruptStore",
            ServiceError::Store(_) => "Internal",
            ServiceError::Internal(_) => "Internal",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self.code() {
            "NotAdmin" | "BadTempPassword" | "NonceExpired" | "NonceUnknown"
            | "UnknownTerminal" | "BadMac" => 401,
            "UnknownUser" => 404,
            "DuplicateUser" | "NotEnrolled" | "NotBlocked" | "AlreadyEnrolled"
            | "ReplayDetected" => 409,
            "UserBlocked" => 423,
            "SessionGapNotElapsed" => 425,
            "EmptySample" | "NonMonotonicTime" | "PressureOutOfRange"
            | "NonFiniteCoordinate" | "DegenerateSample" | "ResampleTooShort"
            | "MalformedFeatures" => 422,
            "InvalidUsername" | "InvalidConfig" | "BadRequest" => 400,
            _ => 500,
        }
    }

    /// Errors that indicate a channel or component attack.
    pub fn is_attack(&self) -> bool {
        matches!(
            self,
            ServiceError::Nonce(NonceError::ReplayDetected)
                | ServiceError::Terminal(TerminalError::BadMac)
                | ServiceError::Terminal(TerminalError::UnknownTerminal)
        )
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorizeResponse {
    pub username: String,
    pub temp_password: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub username: String,
    #[serde(flatten)]
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeResponse {
    pub nonce: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub accepted: bool,
    pub score: f64,
    /// True when this rejection blocked the account.
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttestRequest {
    pub terminal_id: String,
    pub username: String,
    pub decision: Decision,
    /// Hex-encoded HMAC-SHA256 tag.
    pub mac: String,
    pub nonce: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttestResponse {
    pub decision: Decision,
    pub consecutive_failures: u32,
    pub blocked: bool,
}

pub struct ServiceBuilder {
    config: SystemConfig,
    admin_token: String,
    config_path: Option<PathBuf>,
    clock: Arc<dyn Clock>,
    matcher: Arc<dyn Matcher>,
}

impl ServiceBuilder {
    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Replaces the decision back end. Only attack simulations use this.
    pub fn matcher(mut self, matcher: Arc<dyn Matcher>) -> Self {
        self.matcher = matcher;
        self
    }

    /// Where `set_config` persists. Defaults to `<data_dir>/config.json`.
    pub fn config_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.config_path = Some(path.into());
        self
    }

    /// Loads users, terminals and the log from the configured locations.
    pub fn open(self) -> ServiceResult<AccessService> {
        self.config.validate()?;
        let store = Store::open(&self.config.data_dir)?;
        let docs = store.load_all()?;
        let terminals = TerminalRegistry::load(&store.terminals_path())?;
        let log = TransactionLog::open(&self.config.log_path)?;
        let config_path = self
            .config_path
            .unwrap_or_else(|| self.config.data_dir.join("config.json"));
        let users = docs
            .into_iter()
            .map(|d| (d.record.username.clone(), Arc::new(Mutex::new(d))))
            .collect();
        Ok(AccessService {
            config: RwLock::new(Arc::new(self.config)),
            config_path,
            admin_token: self.admin_token,
            store,
            users: RwLock::new(users),
            nonces: NonceTable::new(),
            terminals: RwLock::new(terminals),
            log,
            matcher: self.matcher,
            clock: self.clock,
        })
    }
}

type UserEntry = Arc<Mutex<UserDocument>>;

pub struct AccessService {
    config: RwLock<Arc<SystemConfig>>,
    config_path: PathBuf,
    admin_token: String,
    store: Store,
    users: RwLock<BTreeMap<String, UserEntry>>,
    nonces: NonceTable,
    terminals: RwLock<TerminalRegistry>,
    log: TransactionLog,
    matcher: Arc<dyn Matcher>,
    clock: Arc<dyn Clock>,
}

impl AccessService {
    pub fn builder(config: SystemConfig, admin_token: impl Into<String>) -> ServiceBuilder {
        ServiceBuilder {
            config,
            admin_token: admin_token.into(),
            config_path: None,
            clock: Arc::new(SystemClock),
            matcher: Arc::new(DtwMatcher::default()),
        }
    }

    pub fn config(&self) -> Arc<SystemConfig> {
        Arc::clone(&self.config.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn log(&self) -> &TransactionLog {
        &self.log
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Snapshot of one user's persisted document.
    pub fn user_document(&self, username: &str) -> Option<UserDocument> {
        self.user(username)
            .ok()
            .map(|e| e.lock().unwrap_or_else(|p| p.into_inner()).clone())
    }

    /// Adds or replaces a terminal and rewrites the registry file.
    pub fn register_terminal(&self, t: TerminalIdentity) -> ServiceResult<()> {
        let mut reg = self.terminals.write().unwrap_or_else(|e| e.into_inner());
        let mut next = reg.clone();
        next.insert(t);
        next.save(&self.store.terminals_path())?;
        *reg = next;
        Ok(())
    }

    pub fn sweep_nonces(&self) -> usize {
        self.nonces.sweep(self.clock.now())
    }

    // ----- operations -------------------------------------------------------

    pub fn authorize(
        &self,
        admin: Option<&str>,
        username: &str,
        display_name: Option<&str>,
    ) -> ServiceResult<AuthorizeResponse> {
        self.logged(TxKind::Authorize, username, || {
            self.require_admin(admin)?;
            if !valid_username(username) {
                return Err(ServiceError::InvalidUsername(username.to_string()));
            }
            let cfg = self.config();
            let mut users = self.users.write().unwrap_or_else(|e| e.into_inner());
            if users.contains_key(username) {
                return Err(ServiceError::DuplicateUser(username.to_string()));
            }
            let temp_password = generate_temp_password();
            let record = UserRecord {
                username: username.to_string(),
                display_name: display_name.unwrap_or(username).to_string(),
                enrollment: EnrollmentState::new(
                    &temp_password,
                    cfg.enroll_count,
                    cfg.session1_count,
                ),
                last_success_at: None,
                consecutive_failures: 0,
                blocked: false,
            };
            let doc = UserDocument::new(record);
            self.store.save_user(&doc)?;
            users.insert(username.to_string(), Arc::new(Mutex::new(doc)));
            Ok((
                AuthorizeResponse {
                    username: username.to_string(),
                    temp_password,
                },
                TxEntry::new(username, TxKind::Authorize, TxOutcome::Accept),
            ))
        })
    }

    pub fn submit_enrollment_sample(
        &self,
        admin: Option<&str>,
        username: &str,
        temp_password: &str,
        nonce: &str,
        sample: RawCapture,
    ) -> ServiceResult<Progress> {
        self.logged(TxKind::EnrollSample, username, || {
            let cfg = self.config();
            let now = self.clock.now();
            let gap = Duration::seconds(cfg.min_session_gap_secs as i64);
            let entry = self.user(username)?;
            if cfg.attended_enrollment {
                self.require_admin(admin)?;
            }
            self.nonces.consume(nonce, username, now)?;

            let mut guard = entry.lock().unwrap_or_else(|e| e.into_inner());
            guard.record.enrollment.authenticate(temp_password)?;
            guard.record.enrollment.check_open(now, gap)?;
            let sample = parse_sample(sample)?;
            let features = featurize(&sample, cfg.resample_len)?;

            let mut doc = guard.clone();
            let model = doc.record.enrollment.submit(features, now, gap)?;
            let complete = model.is_some();
            if let Some(m) = model {
                doc.model = Some(m);
            }
            self.store.save_user(&doc)?;
            let progress = doc.record.enrollment.progress();
            *guard = doc;

            let (kind, detail) = if complete {
                let (mu, sd) = guard.record.enrollment.enrollment_spread.unwrap_or_default();
                (
                    TxKind::EnrollComplete,
                    format!("enrolled; cross-distance mean {mu:.4} sd {sd:.4}"),
                )
            } else {
                (
                    TxKind::EnrollSample,
                    format!("{} collected, {} remaining", progress.collected, progress.remaining),
                )
            };
            Ok((
                progress,
                TxEntry::new(username, kind, TxOutcome::Accept).detail(detail),
            ))
        })
    }

    pub fn enrollment_status(&self, username: &str) -> ServiceResult<StatusResponse> {
        self.logged(TxKind::Status, username, || {
            let entry = self.user(username)?;
            let progress = entry
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .record
                .enrollment
                .progress();
            Ok((
                StatusResponse {
                    username: username.to_string(),
                    progress,
                },
                TxEntry::new(username, TxKind::Status, TxOutcome::Accept)
                    .detail(progress.phase.to_string()),
            ))
        })
    }

    pub fn issue_challenge(&self, username: &str) -> ServiceResult<ChallengeResponse> {
        self.logged(TxKind::Challenge, username, || {
            self.user(username)?;
            let cfg = self.config();
            let n = self.nonces.issue(
                username,
                self.clock.now(),
                Duration::seconds(cfg.nonce_ttl_secs as i64),
            );
            Ok((
                ChallengeResponse {
                    nonce: n.token,
                    expires_at: n.expires_at,
                },
                TxEntry::new(username, TxKind::Challenge, TxOutcome::Accept),
            ))
        })
    }

    pub fn verify(
        &self,
        username: &str,
        nonce: &str,
        sample: RawCapture,
    ) -> ServiceResult<VerifyResponse> {
        self.logged(TxKind::Verify, username, || {
            let cfg = self.config();
            let now = self.clock.now();
            let entry = self.user(username)?;
            self.nonces.consume(nonce, username, now)?;

            let mut guard = entry.lock().unwrap_or_else(|e| e.into_inner());
            if !guard.record.enrollment.is_enrolled() {
                return Err(ServiceError::NotEnrolled);
            }
            if guard.record.blocked {
                return Err(ServiceError::UserBlocked);
            }
            let sample = parse_sample(sample)?;
            let features = featurize(&sample, cfg.resample_len)?;
            let model = guard
                .model
                .as_ref()
                .ok_or_else(|| ServiceError::Internal("enrolled user without model".into()))?;
            let s = self.matcher.score(model, &features, cfg.accept_threshold)?;

            let mut doc = guard.clone();
            let newly_blocked = apply_decision(&mut doc.record, s.accepted, cfg.max_failures, now);
            if s.accepted && cfg.update_rule == UpdateRule::ReplaceOldest {
                doc.model = Some(update_model(model, features, now)?);
            }
            self.store.save_user(&doc)?;
            *guard = doc;

            let outcome = if s.accepted {
                TxOutcome::Accept
            } else {
                TxOutcome::Reject
            };
            let detail = if newly_blocked {
                format!("raw {:.6}; account blocked", s.raw_min)
            } else {
                format!("raw {:.6}", s.raw_min)
            };
            Ok((
                VerifyResponse {
                    accepted: s.accepted,
                    score: s.normalized,
                    blocked: guard.record.blocked,
                },
                TxEntry::new(username, TxKind::Verify, outcome)
                    .score(s.normalized)
                    .detail(detail),
            ))
        })
    }

    /// Records a decision reached on an authorized edge terminal. Counters
    /// and blocking follow the same rules as [`verify`](Self::verify); the
    /// model is never updated since no sample reaches the server.
    pub fn edge_attest(&self, req: &AttestRequest) -> ServiceResult<AttestResponse> {
        self.logged(TxKind::EdgeAttest, &req.username, || {
            let cfg = self.config();
            let now = self.clock.now();
            let message = mac_message(&req.terminal_id, &req.username, req.decision, &req.nonce);
            let tag = hex::decode(&req.mac).unwrap_or_default();
            self.terminals
                .read()
                .unwrap_or_else(|e| e.into_inner())
                .verify_terminal_mac(&req.terminal_id, &message, &tag)
                .map_err(|e| {
                    if e == TerminalError::UnknownTerminal && req.terminal_id.is_empty() {
                        ServiceError::BadRequest("terminal_id is empty".into())
                    } else {
                        e.into()
                    }
                })?;
            let entry = self.user(&req.username)?;
            self.nonces.consume(&req.nonce, &req.username, now)?;

            let mut guard = entry.lock().unwrap_or_else(|e| e.into_inner());
            if !guard.record.enrollment.is_enrolled() {
                return Err(ServiceError::NotEnrolled);
            }
            if guard.record.blocked {
                return Err(ServiceError::UserBlocked);
            }
            let accepted = req.decision == Decision::Accept;
            let mut doc = guard.clone();
            let newly_blocked = apply_decision(&mut doc.record, accepted, cfg.max_failures, now);
            self.store.save_user(&doc)?;
            *guard = doc;

            let outcome = if accepted {
                TxOutcome::Accept
            } else {
                TxOutcome::Reject
            };
            let mut detail = format!("terminal {}", req.terminal_id);
            if newly_blocked {
                detail.push_str("; account blocked");
            }
            Ok((
                AttestResponse {
                    decision: req.decision,
                    consecutive_failures: guard.record.consecutive_failures,
                    blocked: guard.record.blocked,
                },
                TxEntry::new(&req.username, TxKind::EdgeAttest, outcome).detail(detail),
            ))
        })
    }

    pub fn list_users(&self, admin: Option<&str>) -> ServiceResult<Vec<UserSummary>> {
        self.logged(TxKind::Admin, "-", || {
            self.require_admin(admin)?;
            let users = self.users.read().unwrap_or_else(|e| e.into_inner());
            let list: Vec<UserSummary> = users
                .values()
                .map(|e| e.lock().unwrap_or_else(|p| p.into_inner()).record.summary())
                .collect();
            let detail = format!("list users ({})", list.len());
            Ok((
                list,
                TxEntry::new("-", TxKind::Admin, TxOutcome::Accept).detail(detail),
            ))
        })
    }

    pub fn unblock(&self, admin: Option<&str>, username: &str) -> ServiceResult<UserSummary> {
        self.logged(TxKind::Admin, username, || {
            self.require_admin(admin)?;
            let entry = self.user(username)?;
            let mut guard = entry.lock().unwrap_or_else(|e| e.into_inner());
            if !guard.record.blocked {
                return Err(ServiceError::NotBlocked);
            }
            let mut doc = guard.clone();
            doc.record.blocked = false;
            doc.record.consecutive_failures = 0;
            self.store.save_user(&doc)?;
            *guard = doc;
            Ok((
                guard.record.summary(),
                TxEntry::new(username, TxKind::Admin, TxOutcome::Accept).detail("unblock"),
            ))
        })
    }

    pub fn get_config(&self, admin: Option<&str>) -> ServiceResult<SystemConfig> {
        self.logged(TxKind::Admin, "-", || {
            self.require_admin(admin)?;
            Ok((
                (*self.config()).clone(),
                TxEntry::new("-", TxKind::Admin, TxOutcome::Accept).detail("get config"),
            ))
        })
    }

    pub fn set_config(
        &self,
        admin: Option<&str>,
        delta: &ConfigDelta,
    ) -> ServiceResult<SystemConfig> {
        self.logged(TxKind::Admin, "-", || {
            self.require_admin(admin)?;
            let mut slot = self.config.write().unwrap_or_else(|e| e.into_inner());
            let next = slot.apply(delta)?;
            let bytes = serde_json::to_vec_pretty(&next).expect("config serializes");
            write_atomic(&self.config_path, &bytes)?;
            *slot = Arc::new(next.clone());
            let detail = format!(
                "set config {}",
                serde_json::to_string(delta).unwrap_or_default()
            );
            Ok((
                next,
                TxEntry::new("-", TxKind::Admin, TxOutcome::Accept).detail(detail),
            ))
        })
    }

    /// The last `last_n` records, not counting the record of this request.
    pub fn read_transactions(
        &self,
        admin: Option<&str>,
        last_n: usize,
    ) -> ServiceResult<Vec<TransactionRecord>> {
        self.logged(TxKind::Admin, "-", || {
            self.require_admin(admin)?;
            let tail = self.log.tail(last_n)?;
            let detail = format!("read transactions ({})", tail.len());
            Ok((
                tail,
                TxEntry::new("-", TxKind::Admin, TxOutcome::Accept).detail(detail),
            ))
        })
    }

    /// Logs a request that was refused before reaching an operation, such as
    /// an undecodable body, and hands the error back.
    pub fn reject_request(&self, kind: TxKind, username: &str, err: ServiceError) -> ServiceError {
        match self.logged::<()>(kind, username, || Err(err)) {
            Err(e) => e,
            Ok(()) => unreachable!(),
        }
    }

    // ----- helpers ----------------------------------------------------------

    fn require_admin(&self, token: Option<&str>) -> ServiceResult<()> {
        match token {
            Some(t)
                if !self.admin_token.is_empty()
                    && bool::from(t.as_bytes().ct_eq(self.admin_token.as_bytes())) =>
            {
                Ok(())
            }
            _ => Err(ServiceError::NotAdmin),
        }
    }

    fn user(&self, username: &str) -> ServiceResult<UserEntry> {
        self.users
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(username)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownUser(username.to_string()))
    }

    fn logged<T>(
        &self,
        kind: TxKind,
        username: &str,
        op: impl FnOnce() -> ServiceResult<(T, TxEntry)>,
    ) -> ServiceResult<T> {
        let (result, entry) = match op() {
            Ok((v, entry)) => (Ok(v), entry),
            Err(e) => {
                let entry = error_entry(kind, username, &e);
                (Err(e), entry)
            }
        };
        if let Err(log_err) = self.log.append(entry, self.clock.now()) {
            tracing::error!(error = %log_err, "transaction log append failed");
            return Err(log_err.into());
        }
        result
    }
}

fn log_username(username: &str) -> String {
    if valid_username(username) {
        username.to_string()
    } else {
        "-".to_string()
    }
}

fn error_entry(kind: TxKind, username: &str, e: &ServiceError) -> TxEntry {
    let (outcome_kind, outcome) = match e {
        ServiceError::Nonce(NonceError::ReplayDetected) => {
            (TxKind::AttackDetected, TxOutcome::Replay)
        }
        e if e.is_attack() => (TxKind::AttackDetected, TxOutcome::Error),
        ServiceError::UserBlocked => (kind, TxOutcome::Blocked),
        _ => (kind, TxOutcome::Error),
    };
    let detail = match outcome_kind {
        TxKind::AttackDetected => format!("{}: {e} (on {})", e.code(), kind.as_str()),
        _ => format!("{}: {e}", e.code()),
    };
    TxEntry::new(log_username(username), outcome_kind, outcome).detail(detail)
}

/// Applies an accept or reject to the counters. Returns true when this call
/// blocked the account.
fn apply_decision(
    record: &mut UserRecord,
    accepted: bool,
    max_failures: u32,
    now: DateTime<Utc>,
) -> bool {
    if accepted {
        record.consecutive_failures = 0;
        record.last_success_at = Some(now);
        false
    } else {
        record.consecutive_failures = record.consecutive_failures.saturating_add(1);
        if !record.blocked && record.consecutive_failures >= max_failures {
            record.blocked = true;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> UserRecord {
        UserRecord {
            username: "u".into(),
            display_name: "u".into(),
            enrollment: EnrollmentState::new("pw", 5, 3),
            last_success_at: None,
            consecutive_failures: 0,
            blocked: false,
        }
    }

    #[test]
    fn fifth_reject_blocks() {
        let mut r = record();
        let now = Utc::now();
        for i in 1..=4 {
            assert!(!apply_decision(&mut r, false, 5, now));
            assert_eq!(r.consecutive_failures, i);
        }
        assert!(apply_decision(&mut r, false, 5, now));
        assert!(r.blocked);
    }

    #[test]
    fn accept_resets_counter() {
        let mut r = record();
        let now = Utc::now();
        apply_decision(&mut r, false, 5, now);
        apply_decision(&mut r, false, 5, now);
        apply_decision(&mut r, true, 5, now);
        apply_decision(&mut r, false, 5, now);
        assert_eq!(r.consecutive_failures, 1);
        assert_eq!(r.last_success_at, Some(now));
    }

    #[test]
    fn error_codes_map_to_statuses() {
        assert_eq!(ServiceError::UserBlocked.http_status(), 423);
        assert_eq!(
            ServiceError::Nonce(NonceError::ReplayDetected).code(),
            "ReplayDetected"
        );
        assert_eq!(ServiceError::NotAdmin.http_status(), 401);
        assert!(ServiceError::Terminal(TerminalError::BadMac).is_attack());
    }
}
