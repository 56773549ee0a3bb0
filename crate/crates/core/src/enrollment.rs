//! Two-session enrollment lifecycle.
//!
//! ```text
//! Authorized -> Session1(k) -> AwaitSession2 -> Session2(k) -> Enrolled
//! ```
//!
//! The enrollment shape (total count and first-session count) is frozen when
//! the user is authorized, so later configuration changes never strand a user
//! halfway through.

use chrono::{DateTime, Duration, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::matcher::{build_model, MatchError, UserModel};
use crate::signal::FeatureSeq;

/// Bytes of entropy in an issued temporary password.
pub const TEMP_PASSWORD_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnrollError {
    #[error("temporary password does not match")]
    BadTempPassword,
    #[error("second session opens at {opens_at}")]
    SessionGapNotElapsed { opens_at: DateTime<Utc> },
    #[error("user is already enrolled")]
    AlreadyEnrolled,
    #[error(transparent)]
    Model(#[from] MatchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Authorized,
    Session1 { collected: usize },
    AwaitSession2 { session1_done_at: DateTime<Utc> },
    Session2 { collected: usize },
    Enrolled,
}

impl Phase {
    pub fn name(&self) -> PhaseName {
        match self {
            Phase::Authorized => PhaseName::Authorized,
            Phase::Session1 { .. } => PhaseName::Session1,
            Phase::AwaitSession2 { .. } => PhaseName::AwaitSession2,
            Phase::Session2 { .. } => PhaseName::Session2,
            Phase::Enrolled => PhaseName::Enrolled,
        }
    }
}

/// Phase without its payload, ordered along the legal path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseName {
    Authorized,
    Session1,
    AwaitSession2,
    Session2,
    Enrolled,
}

impl std::fmt::Display for PhaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PhaseName::Authorized => "Authorized",
            PhaseName::Session1 => "Session1",
            PhaseName::AwaitSession2 => "AwaitSession2",
            PhaseName::Session2 => "Session2",
            PhaseName::Enrolled => "Enrolled",
        };
        f.write_str(s)
    }
}

/// Salted SHA-256 of a temporary password.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordHash {
    pub salt: String,
    pub digest: String,
}

impl PasswordHash {
    pub fn new(password: &str) -> Self {
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        Self {
            salt: hex::encode(salt),
            digest: hex::encode(Self::digest(&salt, password)),
        }
    }

    fn digest(salt: &[u8], password: &str) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(salt);
        h.update(password.as_bytes());
        h.finalize().to_vec()
    }

    pub fn matches(&self, password: &str) -> bool {
        let (Ok(salt), Ok(expected)) = (hex::decode(&self.salt), hex::decode(&self.digest)) else {
            return false;
        };
        let got = Self::digest(&salt, password);
        got.ct_eq(&expected).into()
    }
}

/// Fresh random temporary password, hex encoded.
pub fn generate_temp_password() -> String {
    let mut bytes = [0u8; TEMP_PASSWORD_BYTES];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentSample {
    pub session: u8,
    pub features: FeatureSeq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentState {
    pub phase: Phase,
    /// Erased once enrollment completes.
    pub temp_password_hash: Option<PasswordHash>,
    pub samples: Vec<EnrollmentSample>,
    pub enroll_count: usize,
    pub session1_count: usize,
    /// Mean and spread of the enrollment cross-distances, kept for auditing
    /// signature quality. Never used to refuse enrollment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enrollment_spread: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub phase: PhaseName,
    pub collected: usize,
    pub remaining: usize,
}

impl EnrollmentState {
    pub fn new(temp_password: &str, enroll_count: usize, session1_count: usize) -> Self {
        debug_assert!(session1_count >= 1 && session1_count < enroll_count);
        Self {
            phase: Phase::Authorized,
            temp_password_hash: Some(PasswordHash::new(temp_password)),
            samples: Vec::new(),
            enroll_count,
            session1_count,
            enrollment_spread: None,
        }
    }

    pub fn progress(&self) -> Progress {
        Progress {
            phase: self.phase.name(),
            collected: self.samples.len(),
            remaining: self.enroll_count - self.samples.len(),
        }
    }

    pub fn is_enrolled(&self) -> bool {
        self.phase == Phase::Enrolled
    }

    /// Rejects anything once enrolled, then checks the password.
    pub fn authenticate(&self, temp_password: &str) -> Result<(), EnrollError> {
        if self.is_enrolled() {
            return Err(EnrollError::AlreadyEnrolled);
        }
        match &self.temp_password_hash {
            Some(h) if h.matches(temp_password) => Ok(()),
            _ => Err(EnrollError::BadTempPassword),
        }
    }

    /// Checks whether a sample submitted at `now` would be accepted, without
    /// touching the state.
    pub fn check_open(&self, now: DateTime<Utc>, min_gap: Duration) -> Result<(), EnrollError> {
        match self.phase {
            Phase::Enrolled => Err(EnrollError::AlreadyEnrolled),
            Phase::AwaitSession2 { session1_done_at } => {
                let opens_at = session1_done_at + min_gap;
                if now < opens_at {
                    Err(EnrollError::SessionGapNotElapsed { opens_at })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Appends one featurized sample and advances the phase. Returns the
    /// finished model when this sample completes the enrollment.
    pub fn submit(
        &mut self,
        features: FeatureSeq,
        now: DateTime<Utc>,
        min_gap: Duration,
    ) -> Result<Option<UserModel>, EnrollError> {
        self.check_open(now, min_gap)?;
        let s1 = self.session1_count;
        let s2 = self.enroll_count - s1;
        let (session, next) = match self.phase {
            Phase::Enrolled => unreachable!("rejected by check_open"),
            Phase::Authorized => (1, after_session1(1, s1, now)),
            Phase::Session1 { collected } => (1, after_session1(collected + 1, s1, now)),
            Phase::AwaitSession2 { .. } => (2, Phase::Session2 { collected: 1 }),
            Phase::Session2 { collected } => (2, Phase::Session2 {
                collected: collected + 1,
            }),
        };
        let finishing = matches!(next, Phase::Session2 { collected } if collected == s2);

        let mut model = None;
        if finishing {
            let mut refs: Vec<FeatureSeq> =
                self.samples.iter().map(|s| s.features.clone()).collect();
            refs.push(features.clone());
            let m = build_model(refs, self.enroll_count, now)?;
            self.enrollment_spread = Some((m.mu_ref, m.sigma_ref));
            model = Some(m);
        }

        self.samples.push(EnrollmentSample { session, features });
        if finishing {
            self.phase = Phase::Enrolled;
            self.temp_password_hash = None;
        } else {
            self.phase = next;
        }
        Ok(model)
    }
}

fn after_session1(collected: usize, s1: usize, now: DateTime<Utc>) -> Phase {
    if collected >= s1 {
        Phase::AwaitSession2 {
            session1_done_at: now,
        }
    } else {
        Phase::Session1 { collected }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(k: usize) -> FeatureSeq {
        FeatureSeq::from_scalars(&[0.0, k as f64, 1.0]).unwrap()
    }

    fn t0() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn temp_password_round_trip() {
        let pw = generate_temp_password();
        assert_eq!(pw.len(), TEMP_PASSWORD_BYTES * 2);
        let h = PasswordHash::new(&pw);
        assert!(h.matches(&pw));
        assert!(!h.matches("nope"));
        assert_ne!(generate_temp_password(), pw);
    }

    #[test]
    fn default_split_walks_the_full_path() {
        let gap = Duration::hours(24);
        let mut st = EnrollmentState::new("pw", 5, 3);
        assert_eq!(st.progress().phase, PhaseName::Authorized);

        st.submit(feat(0), t0(), gap).unwrap();
        assert_eq!(st.phase, Phase::Session1 { collected: 1 });
        st.submit(feat(1), t0(), gap).unwrap();
        st.submit(feat(2), t0(), gap).unwrap();
        let p = st.progress();
        assert_eq!(p.phase, PhaseName::AwaitSession2);
        assert_eq!((p.collected, p.remaining), (3, 2));

        let early = t0() + Duration::hours(23);
        assert!(matches!(
            st.submit(feat(3), early, gap),
            Err(EnrollError::SessionGapNotElapsed { .. })
        ));
        assert_eq!(st.samples.len(), 3);

        let later = t0() + Duration::hours(25);
        assert!(st.submit(feat(3), later, gap).unwrap().is_none());
        assert_eq!(st.phase, Phase::Session2 { collected: 1 });
        let model = st.submit(feat(4), later, gap).unwrap().unwrap();
        assert_eq!(model.refs.len(), 5);
        assert!(st.is_enrolled());
        assert!(st.temp_password_hash.is_none());
        assert_eq!(st.authenticate("pw"), Err(EnrollError::AlreadyEnrolled));
        assert_eq!(
            st.submit(feat(5), later, gap).unwrap_err(),
            EnrollError::AlreadyEnrolled
        );
        assert_eq!(
            st.samples.iter().map(|s| s.session).collect::<Vec<_>>(),
            vec![1, 1, 1, 2, 2]
        );
    }

    #[test]
    fn zero_gap_passes_through() {
        let mut st = EnrollmentState::new("pw", 5, 3);
        for k in 0..5 {
            st.submit(feat(k), t0(), Duration::zero()).unwrap();
        }
        assert!(st.is_enrolled());
    }

    #[test]
    fn bad_password() {
        let st = EnrollmentState::new("pw", 5, 3);
        assert_eq!(st.authenticate("wrong"), Err(EnrollError::BadTempPassword));
        assert_eq!(st.authenticate("pw"), Ok(()));
    }
}
