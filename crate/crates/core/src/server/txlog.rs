//! Append-only transaction log, one JSON record per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::store::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Authorize,
    EnrollSample,
    EnrollComplete,
    /// Read-only enrollment status query.
    Status,
    Challenge,
    Verify,
    Admin,
    AttackDetected,
    EdgeAttest,
}

impl TxKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TxKind::Authorize => "authorize",
            TxKind::EnrollSample => "enroll_sample",
            TxKind::EnrollComplete => "enroll_complete",
            TxKind::Status => "status",
            TxKind::Challenge => "challenge",
            TxKind::Verify => "verify",
            TxKind::Admin => "admin",
            TxKind::AttackDetected => "attack_detected",
            TxKind::EdgeAttest => "edge_attest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxOutcome {
    Accept,
    Reject,
    Error,
    Blocked,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub username: String,
    pub kind: TxKind,
    pub outcome: TxOutcome,
    pub normalized_score: Option<f64>,
    pub detail: String,
}

/// Fields of a record before the log assigns `seq` and `timestamp`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxEntry {
    pub username: String,
    pub kind: TxKind,
    pub outcome: TxOutcome,
    pub normalized_score: Option<f64>,
    pub detail: String,
}

impl TxEntry {
    pub fn new(username: impl Into<String>, kind: TxKind, outcome: TxOutcome) -> Self {
        Self {
            username: username.into(),
            kind,
            outcome,
            normalized_score: None,
            detail: String::new(),
        }
    }

    pub fn score(mut self, s: f64) -> Self {
        self.normalized_score = Some(s);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

struct Writer {
    file: File,
    last_seq: u64,
}

pub struct TransactionLog {
    path: PathBuf,
    writer: Mutex<Writer>,
}

impl TransactionLog {
    /// Opens `path` for appending, creating it if missing. Existing records
    /// are scanned to recover the sequence counter.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| StoreError::io(parent, e))?;
        }
        let last_seq = if path.exists() {
            let records = read_all(path)?;
            records.last().map(|r| r.seq).unwrap_or(0)
        } else {
            0
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| StoreError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: Mutex::new(Writer { file, last_seq }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(
        &self,
        entry: TxEntry,
        now: DateTime<Utc>,
    ) -> Result<TransactionRecord, StoreError> {
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let record = TransactionRecord {
            seq: w.last_seq + 1,
            timestamp: now,
            username: entry.username,
            kind: entry.kind,
            outcome: entry.outcome,
            normalized_score: entry.normalized_score,
            detail: entry.detail,
        };
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        w.file
            .write_all(line.as_bytes())
            .and_then(|_| w.file.flush())
            .map_err(|e| StoreError::io(&self.path, e))?;
        w.last_seq = record.seq;
        Ok(record)
    }

    pub fn last_seq(&self) -> u64 {
        self.writer.lock().unwrap_or_else(|e| e.into_inner()).last_seq
    }

    /// The last `n` records in sequence order.
    pub fn tail(&self, n: usize) -> Result<Vec<TransactionRecord>, StoreError> {
        // Hold the writer lock so a concurrent append cannot leave a partial line.
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut all = read_all(&self.path)?;
        let skip = all.len().saturating_sub(n);
        Ok(all.split_off(skip))
    }
}

/// Reads and checks every record of a log file.
pub fn read_all(path: &Path) -> Result<Vec<TransactionRecord>, StoreError> {
    let f = File::open(path).map_err(|e| StoreError::io(path, e))?;
    let mut out: Vec<TransactionRecord> = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| StoreError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let rec: TransactionRecord =
            serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", i + 1),
            })?;
        if let Some(prev) = out.last() {
            if rec.seq <= prev.seq {
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    reason: format!("line {}: seq {} after {}", i + 1, rec.seq, prev.seq),
                });
            }
        }
        out.push(rec);
    }
    Ok(out)
}
