//! Per-user documents on disk.
//!
//! Layout under `data_dir`:
//!
//! ```text
//! users/<username>.json   user record, enrollment state and model
//! terminals.json          edge terminal registry
//! ```
//!
//! Every write goes to a temporary sibling and is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrollment::{EnrollmentState, PhaseName};
use crate::matcher::UserModel;

pub const USER_DOC_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("corrupt store file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl StoreError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub username: String,
    pub display_name: String,
    pub enrollment: EnrollmentState,
    pub last_success_at: Option<DateTime<Utc>>,
    pub consecutive_failures: u32,
    pub blocked: bool,
}

/// What `GET /api/v1/admin/users` reports per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub name: String,
    pub last_success_at: Option<DateTime<Utc>>,
    pub consecutive_failures: u32,
    pub blocked: bool,
    pub phase: PhaseName,
}

impl UserRecord {
    pub fn summary(&self) -> UserSummary {
        UserSummary {
            name: self.username.clone(),
            last_success_at: self.last_success_at,
            consecutive_failures: self.consecutive_failures,
            blocked: self.blocked,
            phase: self.enrollment.phase.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDocument {
    pub format_version: u32,
    pub record: UserRecord,
    pub model: Option<UserModel>,
}

impl UserDocument {
    pub fn new(record: UserRecord) -> Self {
        Self {
            format_version: USER_DOC_VERSION,
            record,
            model: None,
        }
    }
}

/// Usernames double as file names: 1-64 chars of `[A-Za-z0-9_.-]`, not
/// starting with a dot.
pub fn valid_username(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && !name.starts_with('.')
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        let users = root.join("users");
        std::fs::create_dir_all(&users).map_err(|e| StoreError::io(&users, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn user_path(&self, username: &str) -> PathBuf {
        self.root.join("users").join(format!("{username}.json"))
    }

    pub fn terminals_path(&self) -> PathBuf {
        self.root.join("terminals.json")
    }

    pub fn save_user(&self, doc: &UserDocument) -> Result<(), StoreError> {
        let path = self.user_path(&doc.record.username);
        let bytes = serde_json::to_vec_pretty(doc).expect("document serializes");
        write_atomic(&path, &bytes)
    }

    pub fn load_user(&self, path: &Path) -> Result<UserDocument, StoreError> {
        let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
        let doc: UserDocument = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if doc.format_version != USER_DOC_VERSION {
            return Err(StoreError::Corrupt {
                path: path.to_path_buf(),
                reason: format!("unsupported format_version {}", doc.format_version),
            });
        }
        let expected = self.user_path(&doc.record.username);
        if expected != path {
            return Err(StoreError::Corrupt {
                path: path.to_path_buf(),
                reason: format!("file holds user {:?}", doc.record.username),
            });
        }
        Ok(doc)
    }

    /// Loads every user document, sorted by username. Leftover temporary
    /// files from an interrupted write are removed.
    pub fn load_all(&self) -> Result<Vec<UserDocument>, StoreError> {
        let dir = self.root.join("users");
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| StoreError::io(&dir, e))? {
            let entry = entry.map_err(|e| StoreError::io(&dir, e))?;
            let path = entry.path();
            match path.extension().and_then(|e| e.to_str()) {
                Some("json") => paths.push(path),
                Some("tmp") => {
                    let _ = std::fs::remove_file(&path);
                }
                _ => {}
            }
        }
        paths.sort();
        paths.iter().map(|p| self.load_user(p)).collect()
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    res.map_err(|e| StoreError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn username_rules() {
        assert!(valid_username("alice"));
        assert!(valid_username("user_007.x-y"));
        assert!(!valid_username(""));
        assert!(!valid_username(".hidden"));
        assert!(!valid_username("../etc"));
        assert!(!valid_username("a b"));
        assert!(!valid_username(&"a".repeat(65)));
    }

    #[test]
    fn truncated_document_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let path = store.user_path("bob");
        std::fs::write(&path, b"{\"format_version\": 1, \"rec").unwrap();
        match store.load_all() {
            Err(StoreError::Corrupt { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected corrupt store, got {other:?}"),
        }
    }
}
