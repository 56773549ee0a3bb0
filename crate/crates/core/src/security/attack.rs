//! Scripted attack scenarios against a running server.
//!
//! Attack points follow the usual eight-point model of a biometric pipeline:
//!
//! | point | component | simulated here as |
//! |---|---|---|
//! | 1 | sensor | server taken down, connection refused |
//! | 2 | sensor to server channel | replayed verify request, request flood |
//! | 3 | feature extractor | not simulated |
//! | 4 | features to matcher channel | not simulated (in process) |
//! | 5 | matcher | Trojan matcher double |
//! | 6 | template database | not simulated |
//! | 7 | database to matcher channel | not simulated (in process) |
//! | 8 | decision channel | replayed edge attestation, request flood |
//!
//! Every scenario runs over HTTP. [`AttackTarget::Local`] starts a private
//! test-profile server with a registered terminal; Trojan scenarios need it
//! because the matcher is swapped at construction time.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use super::terminal::{compute_mac, mac_message, Decision, TerminalIdentity};
use crate::matcher::{MatchError, MatchScore, Matcher, UserModel};
use crate::server::config::SystemConfig;
use crate::server::http::{spawn, ServerHandle};
use crate::server::service::{AccessService, AttestRequest};
use crate::server::txlog::{TransactionRecord, TxKind, TxOutcome};
use crate::signal::{FeatureSeq, RawCapture};
use crate::tooling::client::{verify_body, ApiClient, ClientError};
use crate::tooling::corpus::{SyntheticUserSpec, DEFAULT_INTERVAL_MS, DEFAULT_POINTS};

/// Longest acceptable time for a full challenge and verify round trip issued
/// while a flood is in progress. Five times the p99 latency (85 ms) measured
/// over 40 local runs of the stock flood on a single core.
pub const DOS_CONTROL_DEADLINE: Duration = Duration::from_millis(425);

pub const DEFAULT_FLOOD_REQUESTS: usize = 1000;
pub const DEFAULT_FLOOD_CONCURRENCY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Replay,
    TrojanAccept,
    TrojanReject,
    DosFlood,
    SensorDestroy,
}

impl AttackKind {
    pub fn default_point(self) -> u8 {
        match self {
            AttackKind::Replay | AttackKind::DosFlood => 2,
            AttackKind::TrojanAccept | AttackKind::TrojanReject => 5,
            AttackKind::SensorDestroy => 1,
        }
    }

    fn supported_points(self) -> &'static [u8] {
        match self {
            AttackKind::Replay | AttackKind::DosFlood => &[2, 8],
            AttackKind::TrojanAccept | AttackKind::TrojanReject => &[5],
            AttackKind::SensorDestroy => &[1],
        }
    }
}

/// Which probe a verify step submits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// An exact copy of the victim's first enrollment sample.
    Reference,
    Genuine,
    Forgery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ScriptStep {
    /// Authorize and fully enroll a fresh victim. Needs a zero session gap.
    Enroll,
    Verify { probe: Probe },
    /// Resubmit the last verify request byte for byte.
    ReplayLastVerify,
    Attest { decision: Decision },
    /// Resubmit the last attestation byte for byte.
    ReplayLastAttest,
    /// Flood the verify endpoint and time a genuine verification issued
    /// halfway through.
    Flood { requests: usize, concurrency: usize },
    /// Shut the local server down.
    DestroySensor,
    /// Expect the connection to be refused.
    ProbeConnection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub attack_point: u8,
    pub kind: AttackKind,
    pub script: Vec<ScriptStep>,
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack point must be in 1..=8, got {0}")]
    InvalidAttackPoint(u8),
    #[error("scenario unsupported: {0}")]
    ScenarioUnsupported(String),
    #[error("{context}: {source}")]
    Client {
        context: String,
        #[source]
        source: ClientError,
    },
    #[error("setting up local server: {0}")]
    Setup(String),
    #[error("script error: {0}")]
    Script(String),
}

fn ctx(context: &str) -> impl FnOnce(ClientError) -> AttackError + '_ {
    move |source| AttackError::Client {
        context: context.to_string(),
        source,
    }
}

impl AttackScenario {
    /// The stock script for `kind` at `point`.
    pub fn standard(kind: AttackKind, point: u8) -> Result<Self, AttackError> {
        use ScriptStep::*;
        let script = match (kind, point) {
            (AttackKind::Replay, 2) => vec![
                Enroll,
                Verify {
                    probe: Probe::Reference,
                },
                ReplayLastVerify,
            ],
            (AttackKind::Replay, 8) => vec![
                Enroll,
                Attest {
                    decision: Decision::Accept,
                },
                ReplayLastAttest,
            ],
            (AttackKind::TrojanAccept | AttackKind::TrojanReject, _) => vec![
                Enroll,
                Verify {
                    probe: Probe::Genuine,
                },
                Verify {
                    probe: Probe::Forgery,
                },
                Verify {
                    probe: Probe::Genuine,
                },
                Verify {
                    probe: Probe::Forgery,
                },
            ],
            (AttackKind::DosFlood, _) => vec![
                Enroll,
                Flood {
                    requests: DEFAULT_FLOOD_REQUESTS,
                    concurrency: DEFAULT_FLOOD_CONCURRENCY,
                },
            ],
            (AttackKind::SensorDestroy, _) => vec![DestroySensor, ProbeConnection],
            _ => vec![],
        };
        let s = Self {
            attack_point: point,
            kind,
            script,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(1..=8).contains(&self.attack_point) {
            return Err(AttackError::InvalidAttackPoint(self.attack_point));
        }
        if !self.kind.supported_points().contains(&self.attack_point) {
            return Err(AttackError::ScenarioUnsupported(format!(
                "{:?} at point {} (supported: {:?})",
                self.kind,
                self.attack_point,
                self.kind.supported_points()
            )));
        }
        Ok(())
    }
}

/// Matcher double that ignores the probe and returns a fixed decision.
#[derive(Debug, Clone, Copy)]
pub struct TrojanMatcher {
    pub accept: bool,
    pub score: f64,
}

impl TrojanMatcher {
    pub fn always_accept() -> Self {
        Self {
            accept: true,
            score: 0.5,
        }
    }

    pub fn always_reject() -> Self {
        Self {
            accept: false,
            score: 9.0,
        }
    }
}

impl Matcher for TrojanMatcher {
    fn score(&self, _: &UserModel, _: &FeatureSeq, _: f64) -> Result<MatchScore, MatchError> {
        Ok(MatchScore {
            raw_min: self.score,
            normalized: self.score,
            accepted: self.accept,
        })
    }
}

/// Where a scenario runs.
pub enum AttackTarget {
    /// A private server started for the scenario.
    Local,
    Remote {
        /// Must carry the admin token.
        client: ApiClient,
        /// Needed for point 8 scenarios.
        terminal: Option<TerminalIdentity>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: AttackScenario,
    /// The attack left the expected trace (error code, log entries, or score
    /// anomaly).
    pub detected: bool,
    /// The scenario's postcondition held.
    pub passed: bool,
    /// Log entries written during the scenario that evidence the attack.
    pub matched: Vec<TransactionRecord>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_latency_ms: Option<f64>,
}

impl AttackReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "attack {:?} at point {}: {} ({})\n",
            self.scenario.kind,
            self.scenario.attack_point,
            if self.detected { "detected" } else { "not detected" },
            if self.passed { "pass" } else { "FAIL" },
        );
        for n in &self.notes {
            s.push_str(&format!("  - {n}\n"));
        }
        s.push_str(&format!("  matched log entries: {}\n", self.matched.len()));
        for r in self.matched.iter().take(10) {
            s.push_str(&format!(
                "    #{} {} {:?} {:?} {}\n",
                r.seq,
                r.username,
                r.kind,
                r.outcome,
                r.detail
            ));
        }
        s
    }
}

/// The normalized score shared by all scored verify records, if there are at
/// least two and they are all identical.
pub fn constant_score_anomaly(records: &[TransactionRecord]) -> Option<f64> {
    let scores: Vec<f64> = records
        .iter()
        .filter(|r| r.kind == TxKind::Verify)
        .filter_map(|r| r.normalized_score)
        .collect();
    match scores.split_first() {
        Some((first, rest)) if !rest.is_empty() && rest.iter().all(|s| s == first) => Some(*first),
        _ => None,
    }
}

struct Local {
    handle: Option<ServerHandle>,
    _dir: tempfile::TempDir,
}

struct Run {
    client: ApiClient,
    terminal: Option<TerminalIdentity>,
    local: Option<Local>,
    victim: Option<Victim>,
    last_verify: Option<Vec<u8>>,
    last_attest: Option<Vec<u8>>,
    rng_state: u64,
}

struct Victim {
    name: String,
    spec: SyntheticUserSpec,
    reference: RawCapture,
}

async fn start_local(matcher: Option<TrojanMatcher>) -> Result<(ApiClient, TerminalIdentity, Local), AttackError> {
    let dir = tempfile::tempdir().map_err(|e| AttackError::Setup(e.to_string()))?;
    let token = hex::encode(random_bytes::<16>());
    let mut b = AccessService::builder(SystemConfig::test_in(dir.path()), token.clone());
    if let Some(m) = matcher {
        b = b.matcher(Arc::new(m));
    }
    let svc = b.open().map_err(|e| AttackError::Setup(e.to_string()))?;
    let terminal = TerminalIdentity::generate("attack-sim-terminal");
    svc.register_terminal(terminal.clone())
        .map_err(|e| AttackError::Setup(e.to_string()))?;
    let handle = spawn(Arc::new(svc), "127.0.0.1:0")
        .await
        .map_err(|e| AttackError::Setup(e.to_string()))?;
    let client = ApiClient::new(handle.base_url()).with_admin_token(token);
    Ok((
        client,
        terminal,
        Local {
            handle: Some(handle),
            _dir: dir,
        },
    ))
}

fn random_bytes<const N: usize>() -> [u8; N] {
    let mut b = [0u8; N];
    rand::rng().fill_bytes(&mut b);
    b
}

impl Run {
    fn victim(&self) -> Result<&Victim, AttackError> {
        self.victim
            .as_ref()
            .ok_or_else(|| AttackError::Script("step needs an Enroll step first".into()))
    }

    fn next_seed(&mut self) -> u64 {
        self.rng_state = crate::tooling::corpus::user_seed(self.rng_state, 1);
        self.rng_state
    }

    fn probe(&mut self, probe: Probe) -> Result<RawCapture, AttackError> {
        use rand::SeedableRng;
        let seed = self.next_seed();
        let v = self.victim()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Ok(match probe {
            Probe::Reference => v.reference.clone(),
            Probe::Genuine => v.spec.genuine(&mut rng, DEFAULT_POINTS, DEFAULT_INTERVAL_MS),
            Probe::Forgery => v
                .spec
                .skilled_forgery(&mut rng, DEFAULT_POINTS, DEFAULT_INTERVAL_MS),
        })
    }

    async fn enroll(&mut self, notes: &mut Vec<String>) -> Result<(), AttackError> {
        let cfg = self.client.get_config().await.map_err(ctx("reading config"))?;
        if cfg.min_session_gap_secs > 0 {
            return Err(AttackError::ScenarioUnsupported(
                "target enforces a session gap; enrollment cannot finish".into(),
            ));
        }
        let name = format!("victim-{}", hex::encode(random_bytes::<4>()));
        let seed = self.next_seed();
        let spec = SyntheticUserSpec::from_seed(seed, 4, 0.03, 0.25);
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xe7)
        };
        let auth = self.client.authorize(&name, None).await.map_err(ctx("authorize"))?;
        let mut reference = None;
        for _ in 0..cfg.enroll_count {
            let s = spec.genuine(&mut rng, DEFAULT_POINTS, DEFAULT_INTERVAL_MS);
            let c = self.client.challenge(&name).await.map_err(ctx("challenge"))?;
            self.client
                .enroll(&name, &auth.temp_password, &c.nonce, &s)
                .await
                .map_err(ctx("enroll"))?;
            reference.get_or_insert(s);
        }
        notes.push(format!("enrolled victim {name}"));
        self.victim = Some(Victim {
            name,
            spec,
            reference: reference.expect("enroll_count >= 2"),
        });
        Ok(())
    }

    async fn flood(
        &mut self,
        requests: usize,
        concurrency: usize,
        notes: &mut Vec<String>,
    ) -> Result<Duration, AttackError> {
        let v = self.victim()?;
        let body = serde_json::to_vec(&verify_body(&v.name, "00", &v.reference))
            .expect("request serializes");
        let sent = Arc::new(AtomicUsize::new(0));
        let permits = Arc::new(Semaphore::new(concurrency.max(1)));
        let mut set = JoinSet::new();
        for _ in 0..requests {
            let client = self.client.clone();
            let body = body.clone();
            let sent = Arc::clone(&sent);
            let permits = Arc::clone(&permits);
            set.spawn(async move {
                let _p = permits.acquire_owned().await.expect("semaphore open");
                let r = client.post_raw("/api/v1/verify", body).await;
                sent.fetch_add(1, Ordering::SeqCst);
                r.map(|r| r.status)
            });
        }
        while sent.load(Ordering::SeqCst) < requests / 2 {
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
        let started = Instant::now();
        let reference = v.reference.clone();
        let control = self
            .client
            .verify_fresh(&v.name, &reference)
            .await
            .map_err(ctx("control request"))?;
        let latency = started.elapsed();
        notes.push(format!(
            "control verification during flood: accepted={} in {:.1} ms",
            control.accepted,
            latency.as_secs_f64() * 1e3
        ));
        let mut statuses = std::collections::BTreeMap::new();
        while let Some(r) = set.join_next().await {
            let key = match r {
                Ok(Ok(s)) => s.to_string(),
                Ok(Err(e)) => format!("transport: {e}"),
                Err(e) => format!("task: {e}"),
            };
            *statuses.entry(key).or_insert(0usize) += 1;
        }
        notes.push(format!("flood of {requests} requests answered with {statuses:?}"));
        Ok(latency)
    }
}

/// Executes `scenario` and reports what the server did about it.
pub async fn run_attack_scenario(
    scenario: &AttackScenario,
    target: AttackTarget,
) -> Result<AttackReport, AttackError> {
    scenario.validate()?;
    let trojan = match scenario.kind {
        AttackKind::TrojanAccept => Some(TrojanMatcher::always_accept()),
        AttackKind::TrojanReject => Some(TrojanMatcher::always_reject()),
        _ => None,
    };
    let mut run = match target {
        AttackTarget::Local => {
            let (client, terminal, local) = start_local(trojan).await?;
            Run {
                client,
                terminal: Some(terminal),
                local: Some(local),
                victim: None,
                last_verify: None,
                last_attest: None,
                rng_state: u64::from_le_bytes(random_bytes::<8>()),
            }
        }
        AttackTarget::Remote { client, terminal } => {
            if trojan.is_some() {
                return Err(AttackError::ScenarioUnsupported(
                    "Trojan matcher scenarios need the local target".into(),
                ));
            }
            Run {
                client,
                terminal,
                local: None,
                victim: None,
                last_verify: None,
                last_attest: None,
                rng_state: u64::from_le_bytes(random_bytes::<8>()),
            }
        }
    };

    let start_seq = if scenario.kind == AttackKind::SensorDestroy {
        0
    } else {
        run.client
            .transactions(1)
            .await
            .map_err(ctx("reading log"))?
            .last()
            .map(|r| r.seq)
            .unwrap_or(0)
    };

    let mut notes = Vec::new();
    let mut replay_codes = Vec::new();
    let mut refused = None;
    let mut latency = None;
    for step in &scenario.script {
        match step {
            ScriptStep::Enroll => run.enroll(&mut notes).await?,
            ScriptStep::Verify { probe } => {
                let sample = run.probe(*probe)?;
                let name = run.victim()?.name.clone();
                let c = run.client.challenge(&name).await.map_err(ctx("challenge"))?;
                let body = serde_json::to_vec(&verify_body(&name, &c.nonce, &sample))
                    .expect("request serializes");
                let r = run
                    .client
                    .post_raw("/api/v1/verify", body.clone())
                    .await
                    .map_err(ctx("verify"))?;
                notes.push(format!(
                    "verify {probe:?}: HTTP {} {}",
                    r.status,
                    String::from_utf8_lossy(&r.body)
                ));
                run.last_verify = Some(body);
            }
            ScriptStep::ReplayLastVerify => {
                let body = run
                    .last_verify
                    .clone()
                    .ok_or_else(|| AttackError::Script("nothing to replay".into()))?;
                let r = run
                    .client
                    .post_raw("/api/v1/verify", body)
                    .await
                    .map_err(ctx("replay"))?;
                let code = r.error_code().unwrap_or_else(|| format!("HTTP {}", r.status));
                notes.push(format!("replayed verify request: {code}"));
                replay_codes.push(code);
            }
            ScriptStep::Attest { decision } => {
                let t = run.terminal.clone().ok_or_else(|| {
                    AttackError::ScenarioUnsupported("point 8 needs terminal credentials".into())
                })?;
                let name = run.victim()?.name.clone();
                let c = run.client.challenge(&name).await.map_err(ctx("challenge"))?;
                let mac = compute_mac(
                    &t.shared_secret,
                    &mac_message(&t.terminal_id, &name, *decision, &c.nonce),
                );
                let req = AttestRequest {
                    terminal_id: t.terminal_id.clone(),
                    username: name,
                    decision: *decision,
                    mac: hex::encode(mac),
                    nonce: c.nonce,
                };
                let body = serde_json::to_vec(&req).expect("request serializes");
                let r = run
                    .client
                    .post_raw("/api/v1/edge/attest", body.clone())
                    .await
                    .map_err(ctx("attest"))?;
                notes.push(format!("attest {decision:?}: HTTP {}", r.status));
                run.last_attest = Some(body);
            }
            ScriptStep::ReplayLastAttest => {
                let body = run
                    .last_attest
                    .clone()
                    .ok_or_else(|| AttackError::Script("nothing to replay".into()))?;
                let r = run
                    .client
                    .post_raw("/api/v1/edge/attest", body)
                    .await
                    .map_err(ctx("replay"))?;
                let code = r.error_code().unwrap_or_else(|| format!("HTTP {}", r.status));
                notes.push(format!("replayed attestation: {code}"));
                replay_codes.push(code);
            }
            ScriptStep::Flood {
                requests,
                concurrency,
            } => {
                latency = Some(run.flood(*requests, *concurrency, &mut notes).await?);
            }
            ScriptStep::DestroySensor => {
                let local = run.local.as_mut().ok_or_else(|| {
                    AttackError::ScenarioUnsupported("cannot take a remote server down".into())
                })?;
                if let Some(h) = local.handle.take() {
                    h.stop().await.map_err(|e| AttackError::Setup(e.to_string()))?;
                }
                notes.push("capture path destroyed (server stopped)".into());
            }
            ScriptStep::ProbeConnection => {
                let r = run.client.challenge("probe").await;
                let is_refused = matches!(&r, Err(e) if e.is_connect());
                notes.push(if is_refused {
                    "connection refused".to_string()
                } else {
                    format!("server still answering: {r:?}")
                });
                refused = Some(is_refused);
            }
        }
    }

    let records: Vec<TransactionRecord> = if scenario.kind == AttackKind::SensorDestroy {
        Vec::new()
    } else {
        let last = run
            .client
            .transactions(usize::MAX >> 1)
            .await
            .map_err(ctx("reading log"))?;
        last.into_iter().filter(|r| r.seq > start_seq).collect()
    };
    let victim = run.victim.as_ref().map(|v| v.name.clone()).unwrap_or_default();

    let (detected, passed, matched) = match scenario.kind {
        AttackKind::Replay => {
            let matched: Vec<_> = records
                .iter()
                .filter(|r| {
                    r.kind == TxKind::AttackDetected
                        && r.outcome == TxOutcome::Replay
                        && r.username == victim
                })
                .cloned()
                .collect();
            let coded = !replay_codes.is_empty() && replay_codes.iter().all(|c| c == "ReplayDetected");
            let d = coded && matched.len() >= replay_codes.len();
            (d, d, matched)
        }
        AttackKind::TrojanAccept | AttackKind::TrojanReject => {
            let verifies: Vec<_> = records
                .iter()
                .filter(|r| r.kind == TxKind::Verify && r.username == victim)
                .cloned()
                .collect();
            let anomaly = constant_score_anomaly(&verifies);
            match anomaly {
                Some(s) => notes.push(format!(
                    "constant-score anomaly: all {} scored verifications returned {s}",
                    verifies.iter().filter(|r| r.normalized_score.is_some()).count()
                )),
                None => notes.push("no constant-score anomaly in verify scores".into()),
            }
            let accepted = verifies
                .iter()
                .filter(|r| r.outcome == TxOutcome::Accept)
                .count();
            notes.push(format!("{accepted} verifications accepted"));
            (anomaly.is_some(), anomaly.is_some(), verifies)
        }
        AttackKind::DosFlood => {
            let matched: Vec<_> = records
                .iter()
                .filter(|r| r.kind == TxKind::Verify && r.outcome == TxOutcome::Error && r.username == victim)
                .cloned()
                .collect();
            let lat = latency.unwrap_or(Duration::MAX);
            let within = lat <= DOS_CONTROL_DEADLINE;
            notes.push(format!(
                "deadline {} ms: {}",
                DOS_CONTROL_DEADLINE.as_millis(),
                if within { "met" } else { "missed" }
            ));
            let flood_steps: usize = scenario
                .script
                .iter()
                .map(|s| match s {
                    ScriptStep::Flood { requests, .. } => *requests,
                    _ => 0,
                })
                .sum();
            (matched.len() >= flood_steps, within, matched)
        }
        AttackKind::SensorDestroy => {
            let d = refused.unwrap_or(false);
            (d, d, Vec::new())
        }
    };

    if let Some(mut local) = run.local.take() {
        if let Some(h) = local.handle.take() {
            let _ = h.stop().await;
        }
    }

    Ok(AttackReport {
        scenario: scenario.clone(),
        detected,
        passed,
        matched,
        notes,
        control_latency_ms: latency.map(|l| l.as_secs_f64() * 1e3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_validation() {
        assert!(matches!(
            AttackScenario::standard(AttackKind::Replay, 9),
            Err(AttackError::InvalidAttackPoint(9))
        ));
        for p in [1, 3, 4, 5, 6, 7] {
            assert!(matches!(
                AttackScenario::standard(AttackKind::Replay, p),
                Err(AttackError::ScenarioUnsupported(_))
            ));
        }
        assert!(AttackScenario::standard(AttackKind::Replay, 8).is_ok());
        assert!(AttackScenario::standard(AttackKind::TrojanAccept, 3).is_err());
    }

    #[test]
    fn anomaly_needs_two_identical_scores() {
        let rec = |s: Option<f64>| TransactionRecord {
            seq: 1,
            timestamp: chrono::DateTime::UNIX_EPOCH,
            username: "v".into(),
            kind: TxKind::Verify,
            outcome: TxOutcome::Accept,
            normalized_score: s,
            detail: String::new(),
        };
        assert_eq!(constant_score_anomaly(&[rec(Some(0.5))]), None);
        assert_eq!(
            constant_score_anomaly(&[rec(Some(0.5)), rec(None), rec(Some(0.5))]),
            Some(0.5)
        );
        assert_eq!(constant_score_anomaly(&[rec(Some(0.5)), rec(Some(0.6))]), None);
    }
}
