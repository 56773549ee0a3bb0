//! Single-use challenge nonces.
//!
//! A nonce is issued for one username and authorizes exactly one request
//! within its time-to-live. Used entries are retained for another TTL so a
//! resubmission is reported as a replay rather than as an unknown token.

use std::collections::HashMap;
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Token length in bytes (128 bits).
pub const NONCE_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NonceError {
    #[error("nonce was already used")]
    ReplayDetected,
    #[error("nonce expired")]
    NonceExpired,
    #[error("nonce unknown")]
    NonceUnknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nonce {
    pub token: String,
    pub username: String,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    pub used: bool,
}

#[derive(Debug, Default)]
pub struct NonceTable {
    entries: Mutex<HashMap<String, Nonce>>,
}

impl NonceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issue(&self, username: &str, now: DateTime<Utc>, ttl: Duration) -> Nonce {
        let mut bytes = [0u8; NONCE_BYTES];
        rand::rng().fill_bytes(&mut bytes);
        let nonce = Nonce {
            token: hex::encode(bytes),
            username: username.to_string(),
            issued_at: now,
            expires_at: now + ttl,
            used: false,
        };
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(nonce.token.clone(), nonce.clone());
        nonce
    }

    /// Atomically checks and marks `token` as used for `username`.
    ///
    /// A token bound to another username is reported as unknown and is left
    /// untouched.
    pub fn consume(
        &self,
        token: &str,
        username: &str,
        now: DateTime<Utc>,
    ) -> Result<(), NonceError> {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let Some(n) = entries.get_mut(token) else {
            return Err(NonceError::NonceUnknown);
        };
        if n.username != username {
            return Err(NonceError::NonceUnknown);
        }
        if n.used {
            return Err(NonceError::ReplayDetected);
        }
        if now >= n.expires_at {
            return Err(NonceError::NonceExpired);
        }
        n.used = true;
        Ok(())
    }

    /// Drops entries whose expiry lies more than one TTL in the past.
    pub fn sweep(&self, now: DateTime<Utc>) -> usize {
        let mut entries = self.entries.lock().unwrap_or_else(|e| e.into_inner());
        let before = entries.len();
        entries.retain(|_, n| {
            let ttl = n.expires_at - n.issued_at;
            now < n.expires_at + ttl
        });
        before - entries.len()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn t0() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn tokens_are_distinct_and_128_bit() {
        let table = NonceTable::new();
        let a = table.issue("alice", t0(), Duration::seconds(120));
        let b = table.issue("alice", t0(), Duration::seconds(120));
        assert_ne!(a.token, b.token);
        assert_eq!(a.token.len(), 32);
    }

    #[test]
    fn single_use() {
        let table = NonceTable::new();
        let n = table.issue("alice", t0(), Duration::seconds(120));
        assert_eq!(table.consume(&n.token, "alice", t0()), Ok(()));
        assert_eq!(
            table.consume(&n.token, "alice", t0()),
            Err(NonceError::ReplayDetected)
        );
    }

    #[test]
    fn bound_to_username() {
        let table = NonceTable::new();
        let n = table.issue("alice", t0(), Duration::seconds(120));
        assert_eq!(
            table.consume(&n.token, "bob", t0()),
            Err(NonceError::NonceUnknown)
        );
        assert_eq!(table.consume(&n.token, "alice", t0()), Ok(()));
    }

    #[test]
    fn expiry() {
        let table = NonceTable::new();
        let n = table.issue("alice", t0(), Duration::seconds(120));
        let late = t0() + Duration::seconds(120);
        assert_eq!(
            table.consume(&n.token, "alice", late),
            Err(NonceError::NonceExpired)
        );
        assert_eq!(
            table.consume("00", "alice", t0()),
            Err(NonceError::NonceUnknown)
        );
    }

    #[test]
    fn sweep_keeps_recently_used_tokens() {
        let table = NonceTable::new();
        let n = table.issue("alice", t0(), Duration::seconds(10));
        table.consume(&n.token, "alice", t0()).unwrap();
        assert_eq!(table.sweep(t0() + Duration::seconds(15)), 0);
        assert_eq!(
            table.consume(&n.token, "alice", t0() + Duration::seconds(15)),
            Err(NonceError::ReplayDetected)
        );
        assert_eq!(table.sweep(t0() + Duration::seconds(20)), 1);
        assert!(table.is_empty());
    }

    #[test]
    fn concurrent_double_spend_has_one_winner() {
        let table = Arc::new(NonceTable::new());
        let n = table.issue("alice", t0(), Duration::seconds(120));
        let handles: Vec<_> = (0..64)
            .map(|_| {
                let table = Arc::clone(&table);
                let tok = n.token.clone();
                std::thread::spawn(move || table.consume(&tok, "alice", t0()).is_ok())
            })
            .collect();
        let wins = handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .filter(|ok| *ok)
            .count();
        assert_eq!(wins, 1);
    }
}
