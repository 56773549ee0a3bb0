//! Edge terminals and their shared-secret MACs.
//!
//! A terminal that verifies signatures locally reports only its decision.
//! The report is authenticated with HMAC-SHA256 over
//!
//! ```text
//! terminal_id 0x00 username 0x00 decision 0x00 nonce
//! ```
//!
//! where `decision` is `accept` or `reject` and `nonce` is the hex token from
//! `POST /api/v1/challenge`.

use std::collections::BTreeMap;
use std::path::Path;

use hmac::{Hmac, KeyInit, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::server::store::{write_atomic, StoreError};

type HmacSha256 = Hmac<Sha256>;

pub const SECRET_BYTES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TerminalError {
    #[error("terminal unknown or disabled")]
    UnknownTerminal,
    #[error("message authentication failed")]
    BadMac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalIdentity {
    pub terminal_id: String,
    #[serde(with = "hex_secret")]
    pub shared_secret: [u8; SECRET_BYTES],
    pub enabled: bool,
}

impl TerminalIdentity {
    /// New enabled terminal with a random 256-bit secret.
    pub fn generate(terminal_id: impl Into<String>) -> Self {
        let mut secret = [0u8; SECRET_BYTES];
        rand::rng().fill_bytes(&mut secret);
        Self {
            terminal_id: terminal_id.into(),
            shared_secret: secret,
            enabled: true,
        }
    }
}

mod hex_secret {
    use super::SECRET_BYTES;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; SECRET_BYTES], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; SECRET_BYTES], D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("shared_secret must be 32 bytes"))
    }
}

/// The exact byte string covered by the MAC.
pub fn mac_message(terminal_id: &str, username: &str, decision: Decision, nonce: &str) -> Vec<u8> {
    let mut m = Vec::with_capacity(terminal_id.len() + username.len() + nonce.len() + 10);
    m.extend_from_slice(terminal_id.as_bytes());
    m.push(0);
    m.extend_from_slice(username.as_bytes());
    m.push(0);
    m.extend_from_slice(decision.as_str().as_bytes());
    m.push(0);
    m.extend_from_slice(nonce.as_bytes());
    m
}

pub fn compute_mac(secret: &[u8], message: &[u8]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(secret).expect("HMAC accepts any key length");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

/// Constant-time MAC check.
pub fn verify_mac(secret: &[u8], message: &[u8], tag: &[u8]) -> bool {
    let mut mac = HmacSha256::new_from_slice(secret).expect("HMAC accepts any key length");
    mac.update(message);
    mac.verify_slice(tag).is_ok()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalRegistry {
    terminals: BTreeMap<String, TerminalIdentity>,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    terminals: Vec<TerminalIdentity>,
}

impl TerminalRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: TerminalIdentity) {
        self.terminals.insert(t.terminal_id.clone(), t);
    }

    pub fn get(&self, id: &str) -> Option<&TerminalIdentity> {
        self.terminals.get(id)
    }

    pub fn set_enabled(&mut self, id: &str, enabled: bool) -> bool {
        match self.terminals.get_mut(id) {
            Some(t) => {
                t.enabled = enabled;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminals.is_empty()
    }

    /// Verifies a decision report from `terminal_id`.
    pub fn verify_terminal_mac(
        &self,
        terminal_id: &str,
        message: &[u8],
        tag: &[u8],
    ) -> Result<(), TerminalError> {
        let t = self
            .terminals
            .get(terminal_id)
            .filter(|t| t.enabled)
            .ok_or(TerminalError::UnknownTerminal)?;
        if verify_mac(&t.shared_secret, message, tag) {
            Ok(())
        } else {
            Err(TerminalError::BadMac)
        }
    }

    /// Missing file means an empty registry.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        if !path.exists() {
            return Ok(Self::new());
        }
        let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
        let file: RegistryFile = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut reg = Self::new();
        for t in file.terminals {
            reg.insert(t);
        }
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let file = RegistryFile {
            terminals: self.terminals.values().cloned().collect(),
        };
        write_atomic(path, &serde_json::to_vec_pretty(&file).expect("registry serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_layout() {
        let m = mac_message("t1", "alice", Decision::Reject, "ab12");
        assert_eq!(m, b"t1\0alice\0reject\0ab12".to_vec());
    }

    // Reference tag computed independently with Python's hmac/hashlib.
    #[test]
    fn known_vector() {
        let secret: Vec<u8> = (0u8..32).collect();
        let msg = mac_message(
            "kiosk-01",
            "alice",
            Decision::Accept,
            "00112233445566778899aabbccddeeff",
        );
        assert_eq!(
            hex::encode(compute_mac(&secret, &msg)),
            include_str!("../../tests/data/mac_vector_accept.hex").trim()
        );
    }

    #[test]
    fn registry_checks() {
        let mut reg = TerminalRegistry::new();
        let t = TerminalIdentity::generate("kiosk");
        let msg = mac_message("kiosk", "alice", Decision::Accept, "n");
        let tag = compute_mac(&t.shared_secret, &msg);
        reg.insert(t);
        assert_eq!(reg.verify_terminal_mac("kiosk", &msg, &tag), Ok(()));

        let mut flipped = tag;
        flipped[31] ^= 1;
        assert_eq!(
            reg.verify_terminal_mac("kiosk", &msg, &flipped),
            Err(TerminalError::BadMac)
        );
        assert_eq!(
            reg.verify_terminal_mac("other", &msg, &tag),
            Err(TerminalError::UnknownTerminal)
        );
        reg.set_enabled("kiosk", false);
        assert_eq!(
            reg.verify_terminal_mac("kiosk", &msg, &tag),
            Err(TerminalError::UnknownTerminal)
        );
    }

    #[test]
    fn registry_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("terminals.json");
        let mut reg = TerminalRegistry::new();
        reg.insert(TerminalIdentity::generate("a"));
        reg.insert(TerminalIdentity::generate("b"));
        reg.save(&path).unwrap();
        assert_eq!(TerminalRegistry::load(&path).unwrap(), reg);
    }
}
