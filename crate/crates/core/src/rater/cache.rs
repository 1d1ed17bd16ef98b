//! Append-only JSON-lines rating cache and prompt transcript.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::PromptProfile;
use super::Rating;

/// Hex SHA-256 of a normalized statement.
pub fn stmt_hash(stmt: &str) -> String {
    hex::encode(Sha256::digest(stmt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub stmt_hash: String,
    pub provider: String,
    pub profile: PromptProfile,
}

impl CacheKey {
    pub fn new(stmt: &str, provider: &str, profile: PromptProfile) -> Self {
        CacheKey {
            stmt_hash: stmt_hash(stmt),
            provider: provider.to_string(),
            profile,
        }
    }
}

/// One line of a cache or replay file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: CacheKey,
    pub stmt: String,
    pub value: u8,
    pub flagged: bool,
    #[serde(default)]
    pub timestamp: u64,
}

impl CacheRecord {
    pub fn from_rating(r: &Rating) -> Self {
        CacheRecord {
            key: CacheKey::new(&r.statement, &r.provider, r.profile),
            stmt: r.statement.clone(),
            value: r.value,
            flagged: r.flagged,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn to_rating(&self) -> Rating {
        Rating {
            statement: self.stmt.clone(),
            value: self.value,
            provider: self.key.provider.clone(),
            profile: self.key.profile,
            flagged: self.flagged,
        }
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cache {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Read every record of a JSON-lines file. Blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<CacheRecord>, CacheError> {
    let io = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Ratings keyed by (statement, provider, profile). Writes are serialized
/// and appended to the backing file immediately; later records win on reload.
#[derive(Debug, Default)]
pub struct RatingCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<CacheKey, Rating>>,
    file: Mutex<Option<File>>,
}

impl RatingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists and append new records to it.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            for rec in read_records(&path)? {
                entries.insert(rec.key.clone(), rec.to_rating());
            }
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CacheError::Io {
                path: path.clone(),
                source,
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| CacheError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(RatingCache {
            path: Some(path),
            entries: Mutex::new(entries),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &CacheKey) -> Option<Rating> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn put(&self, rating: &Rating) -> Result<(), CacheError> {
        let rec = CacheRecord::from_rating(rating);
        let mut file = self.file.lock().expect("cache file lock");
        if let Some(f) = file.as_mut() {
            let mut line = serde_json::to_string(&rec).expect("record serializes");
            line.push('\n');
            f.write_all(line.as_bytes()).map_err(|source| CacheError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            })?;
        }
        self.entries.lock().expect("cache lock").insert(rec.key, rating.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> BTreeMap<CacheKey, Rating> {
        self.entries.lock().expect("cache lock").clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub provider: String,
    pub profile: PromptProfile,
    pub prompt: String,
    pub reply: Option<String>,
    pub error: Option<String>,
}

/// Append-only log of every prompt sent and what came back.
#[derive(Debug)]
pub struct Transcript {
    path: PathBuf,
    file: Mutex<File>,
}

impl Transcript {
    pub fn open(path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Transcript {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn log(&self, rec: &TranscriptRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_string(rec).expect("record serializes");
        line.push('\n');
        self.file.lock().expect("transcript lock").write_all(line.as_bytes())
    }

    pub fn read(path: &Path) -> std::io::Result<Vec<TranscriptRecord>> {
        let text = std::fs::read_to_string(path)?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
            .collect()
    }
}
