//! Corpus enrollment and verification through a live server.

use std::sync::Arc;

use thiserror::Error;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use super::client::{ApiClient, ClientError};
use super::corpus::{Corpus, ForgeryKind};
use super::eval::{probe_label, Trial, TrialKind};
use crate::server::config::{ConfigDelta, UpdateRule};
use crate::signal::RawCapture;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{context}: {source}")]
    Client {
        context: String,
        #[source]
        source: ClientError,
    },
    #[error(
        "server requires {0}s between enrollment sessions; enroll-batch needs a server with min_session_gap_secs = 0"
    )]
    SessionGap(u64),
    #[error("user {user} has {got} genuine samples, enrollment needs {need}")]
    InsufficientSamples { user: String, got: usize, need: usize },
}

fn ctx(context: impl Into<String>) -> impl FnOnce(ClientError) -> BatchError {
    let context = context.into();
    move |source| BatchError::Client { context, source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrollSummary {
    pub users: usize,
    pub samples: usize,
}

/// Authorizes every corpus user and submits its first `enroll_count` genuine
/// samples. `enroll_count` is read from the server.
pub async fn enroll_batch(client: &ApiClient, corpus: &Corpus) -> Result<EnrollSummary, BatchError> {
    let cfg = client.get_config().await.map_err(ctx("reading server config"))?;
    if cfg.min_session_gap_secs > 0 {
        return Err(BatchError::SessionGap(cfg.min_session_gap_secs));
    }
    let need = cfg.enroll_count;
    let mut samples = 0;
    for u in &corpus.users {
        if u.genuine.len() < need {
            return Err(BatchError::InsufficientSamples {
                user: u.id.clone(),
                got: u.genuine.len(),
                need,
            });
        }
        let auth = client
            .authorize(&u.id, None)
            .await
            .map_err(ctx(format!("authorizing {}", u.id)))?;
        for (i, s) in u.genuine[..need].iter().enumerate() {
            let what = format!("enrolling {} sample {i}", u.id);
            let c = client.challenge(&u.id).await.map_err(ctx(what.clone()))?;
            client
                .enroll(&u.id, &auth.temp_password, &c.nonce, s)
                .await
                .map_err(ctx(what))?;
            samples += 1;
        }
    }
    Ok(EnrollSummary {
        users: corpus.users.len(),
        samples,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyBatchOptions {
    /// Genuine samples per user already used for enrollment.
    pub enroll_count: usize,
    /// Requests in flight at once.
    pub parallel: usize,
    /// Switch the server to `update_rule = none` and an unreachable failure
    /// limit for the run, so every probe meets the enrollment-time model.
    /// The previous values are restored afterwards.
    pub freeze_models: bool,
}

impl Default for VerifyBatchOptions {
    fn default() -> Self {
        Self {
            enroll_count: 5,
            parallel: 1,
            freeze_models: true,
        }
    }
}

struct Job {
    index: usize,
    user: String,
    probe: String,
    kind: TrialKind,
    sample: RawCapture,
}

/// Verifies every non-enrollment probe. Trials come back in the same order
/// as [`super::eval::score_trials`] produces them, with the server's scores.
pub async fn verify_batch(
    client: &ApiClient,
    corpus: &Corpus,
    opts: VerifyBatchOptions,
) -> Result<Vec<Trial>, BatchError> {
    if !opts.freeze_models {
        return run_probes(client, corpus, opts).await;
    }
    let before = client.get_config().await.map_err(ctx("reading server config"))?;
    let freeze = ConfigDelta {
        update_rule: Some(UpdateRule::None),
        max_failures: Some(u32::MAX),
        ..ConfigDelta::default()
    };
    client
        .set_config(&freeze)
        .await
        .map_err(ctx("freezing models"))?;
    let result = run_probes(client, corpus, opts).await;
    let restore = ConfigDelta {
        update_rule: Some(before.update_rule),
        max_failures: Some(before.max_failures),
        ..ConfigDelta::default()
    };
    client
        .set_config(&restore)
        .await
        .map_err(ctx("restoring server config"))?;
    result
}

async fn run_probes(
    client: &ApiClient,
    corpus: &Corpus,
    opts: VerifyBatchOptions,
) -> Result<Vec<Trial>, BatchError> {
    let mut jobs = Vec::new();
    for u in &corpus.users {
        for (i, g) in u.genuine.iter().enumerate().skip(opts.enroll_count) {
            jobs.push((u.id.clone(), probe_label(TrialKind::Genuine, i), TrialKind::Genuine, g));
        }
        for (i, f) in u.forgeries.iter().enumerate() {
            let kind = match f.kind {
                ForgeryKind::Skilled => TrialKind::SkilledForgery,
                ForgeryKind::Random => TrialKind::RandomForgery,
            };
            jobs.push((u.id.clone(), probe_label(kind, i), kind, &f.sample));
        }
    }

    let permits = Arc::new(Semaphore::new(opts.parallel.max(1)));
    let mut set = JoinSet::new();
    for (index, (user, probe, kind, sample)) in jobs.into_iter().enumerate() {
        let job = Job {
            index,
            user,
            probe,
            kind,
            sample: sample.clone(),
        };
        let client = client.clone();
        let permits = Arc::clone(&permits);
        set.spawn(async move {
            let _permit = permits.acquire_owned().await.expect("semaphore open");
            let r = client
                .verify_fresh(&job.user, &job.sample)
                .await
                .map_err(ctx(format!("verifying {} {}", job.user, job.probe)))?;
            Ok::<_, BatchError>((
                job.index,
                Trial {
                    user: job.user,
                    probe: job.probe,
                    kind: job.kind,
                    normalized_score: r.score,
                },
            ))
        });
    }

    let mut out = Vec::new();
    while let Some(res) = set.join_next().await {
        match res {
            Ok(Ok(t)) => out.push(t),
            Ok(Err(e)) => return Err(e),
            Err(join) => std::panic::resume_unwind(join.into_panic()),
        }
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out.into_iter().map(|(_, t)| t).collect())
}
