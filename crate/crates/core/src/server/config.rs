//! System configuration: storage locations, blocking policy, model update
//! rule, enrollment shape and transport settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{DEFAULT_RESAMPLE_LEN, MIN_RESAMPLE_LEN};

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::sync::Arc<std::io::Error>,
    },
    #[error("cannot parse config {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

/// What happens to a user's model after an accepted verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    None,
    #[default]
    ReplaceOldest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub data_dir: PathBuf,
    pub log_path: PathBuf,
    /// Consecutive rejections before the account is blocked.
    pub max_failures: u32,
    /// Upper bound on the normalized score for acceptance.
    pub accept_threshold: f64,
    pub update_rule: UpdateRule,
    /// Signatures collected per enrollment.
    pub enroll_count: usize,
    /// How many of them belong to the first session.
    pub session1_count: usize,
    pub min_session_gap_secs: u64,
    pub bind_address: String,
    pub nonce_ttl_secs: u64,
    pub attended_enrollment: bool,
    pub resample_len: usize,
}

pub const PRODUCTION_SESSION_GAP_SECS: u64 = 24 * 60 * 60;

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            log_path: PathBuf::from("data/transactions.log"),
            max_failures: 5,
            accept_threshold: 1.6,
            update_rule: UpdateRule::ReplaceOldest,
            enroll_count: 5,
            session1_count: 3,
            min_session_gap_secs: PRODUCTION_SESSION_GAP_SECS,
            bind_address: "127.0.0.1:8080".to_string(),
            nonce_ttl_secs: 120,
            attended_enrollment: false,
            resample_len: DEFAULT_RESAMPLE_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Production,
    /// Zero session gap so enrollment can finish in one sitting.
    Test,
}

impl SystemConfig {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Production => Self::default(),
            Profile::Test => Self {
                min_session_gap_secs: 0,
                ..Self::default()
            },
        }
    }

    /// Test profile rooted at `data_dir`, log file inside it.
    pub fn test_in(data_dir: &Path) -> Self {
        Self {
            data_dir: data_dir.to_path_buf(),
            log_path: data_dir.join("transactions.log"),
            ..Self::for_profile(Profile::Test)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.max_failures < 1 {
            return bad("max_failures must be at least 1");
        }
        if self.enroll_count < 2 {
            return bad("enroll_count must be at least 2");
        }
        if self.session1_count < 1 || self.session1_count >= self.enroll_count {
            return bad("session1_count must satisfy 1 <= session1_count < enroll_count");
        }
        if !(self.accept_threshold.is_finite() && self.accept_threshold >= 0.0) {
            return bad("accept_threshold must be finite and non-negative");
        }
        if self.nonce_ttl_secs == 0 {
            return bad("nonce_ttl_secs must be positive");
        }
        if self.resample_len < MIN_RESAMPLE_LEN {
            return bad("resample_len must be at least 8");
        }
        if self.bind_address.parse::<std::net::SocketAddr>().is_err() {
            return bad("bind_address must be host:port");
        }
        Ok(())
    }

    pub fn apply(&self, delta: &ConfigDelta) -> Result<SystemConfig, ConfigError> {
        let mut next = self.clone();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &delta.$f { next.$f = v.clone(); } )* };
        }
        set!(
            data_dir,
            log_path,
            max_failures,
            accept_threshold,
            update_rule,
            enroll_count,
            session1_count,
            min_session_gap_secs,
            bind_address,
            nonce_ttl_secs,
            attended_enrollment,
            resample_len
        );
        next.validate()?;
        Ok(next)
    }

    pub fn load(path: &Path) -> Result<SystemConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: std::sync::Arc::new(e),
        })?;
        let cfg: SystemConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Partial update for `PUT /api/v1/admin/config`. Absent fields are kept.
///
/// `data_dir`, `log_path` and `bind_address` are persisted immediately but
/// only take effect on the next start.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDelta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_failures: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub update_rule: Option<UpdateRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enroll_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session1_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_session_gap_secs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bind_address: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonce_ttl_secs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attended_enrollment: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample_len: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SystemConfig::default().validate().unwrap();
        SystemConfig::for_profile(Profile::Test).validate().unwrap();
    }

    #[test]
    fn session_split_must_leave_a_second_session() {
        let delta = ConfigDelta {
            session1_count: Some(5),
            ..Default::default()
        };
        assert!(matches!(
            SystemConfig::default().apply(&delta),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn zero_max_failures_rejected() {
        let delta = ConfigDelta {
            max_failures: Some(0),
            ..Default::default()
        };
        assert!(SystemConfig::default().apply(&delta).is_err());
    }

    #[test]
    fn delta_only_touches_given_fields() {
        let delta = ConfigDelta {
            max_failures: Some(3),
            ..Default::default()
        };
        let next = SystemConfig::default().apply(&delta).unwrap();
        assert_eq!(next.max_failures, 3);
        assert_eq!(next.accept_threshold, 1.6);
    }

    #[test]
    fn unknown_delta_fields_rejected() {
        assert!(serde_json::from_str::<ConfigDelta>(r#"{"max_failure": 3}"#).is_err());
    }
}
