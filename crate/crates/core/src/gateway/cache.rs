//! Append-only JSON Lines store of recorded responses.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::GatewayError;

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub response: String,
}

/// Recorded responses keyed by request hash. Reads are shared; recording
/// takes the write lock and appends to the backing file, if any.
#[derive(Debug, Default)]
pub struct ReplayCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheEntry>>,
}

impl ReplayCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path`. Repeated identical lines are tolerated; two different
    /// responses for one key are not.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
        let mut entries = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| GatewayError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| GatewayError::MalformedCache {
                line: i + 1,
                message: e.to_string(),
            })?;
            insert(&mut entries, entry)?;
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(entries),
        })
    }

    /// As [`ReplayCache::load`], starting empty when the file does not exist
    /// yet.
    pub fn open_or_create(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self {
                path: Some(path.to_path_buf()),
                entries: RwLock::default(),
            })
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn lookup(&self, key: &str) -> Option<String> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .map(|e| e.response.clone())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `response` under `key`. Returns `false` for an identical
    /// re-recording.
    pub fn record(&self, key: &str, model: &str, response: &str) -> Result<bool, GatewayError> {
        let mut entries = self.entries.write().expect("cache lock poisoned");
        let entry = CacheEntry {
            key: key.to_string(),
            model: model.to_string(),
            response: response.to_string(),
        };
        if !insert(&mut entries, entry.clone())? {
            return Ok(false);
        }
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&entry).map_err(|e| GatewayError::Io(e.to_string()))?;
            let appended = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{line}"));
            if let Err(e) = appended {
                entries.remove(key);
                return Err(GatewayError::Io(format!("{}: {e}", path.display())));
            }
        }
        Ok(true)
    }
}

fn insert(entries: &mut HashMap<String, CacheEntry>, entry: CacheEntry) -> Result<bool, GatewayError> {
    match entries.get(&entry.key) {
        Some(existing) if existing.response == entry.response => Ok(false),
        Some(_) => Err(GatewayError::ConflictingRecording { key: entry.key }),
        None => {
            entries.insert(entry.key.clone(), entry);
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = ReplayCache::open_or_create(&path).unwrap();
        assert!(cache.record("k1", "m", "SELECT 1;").unwrap());
        assert!(cache.record("k2", "m", "line\nbreak").unwrap());
        assert!(!cache.record("k1", "m", "SELECT 1;").unwrap());
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let again = ReplayCache::load(&path).unwrap();
        assert_eq!(again.lookup("k2").as_deref(), Some("line\nbreak"));
    }

    #[test]
    fn conflicting_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(
            &path,
            "{\"key\":\"k\",\"model\":\"m\",\"response\":\"a\"}\n{\"key\":\"k\",\"model\":\"m\",\"response\":\"b\"}\n",
        )
        .unwrap();
        assert!(matches!(ReplayCache::load(&path), Err(GatewayError::ConflictingRecording { .. })));
        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(ReplayCache::load(&path), Err(GatewayError::MalformedCache { line: 1, .. })));
    }
}
