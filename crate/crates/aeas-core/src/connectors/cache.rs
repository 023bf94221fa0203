//! Write-once disk cache for model completions.
//!
//! Keyed by a content hash of `(model_name, prompt_text, temperature)`, laid
//! out as `<dir>/<first two hex chars>/<key>.json`. Entries are written to a
//! temp file and atomically renamed into place, so concurrent writers of the
//! same key race benignly and readers never observe a partial entry.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CacheEntry {
    pub key: String,
    pub response_text: String,
    pub stored_at: DateTime<Utc>,
}

/// Stable content hash for a completion request. Equal keys if and only if
/// the canonical JSON encoding of the three fields is byte-equal.
pub fn completion_key(model_name: &str, prompt_text: &str, temperature: f64) -> String {
    let canonical = serde_json::to_vec(&(model_name, prompt_text, temperature))
        .expect("tuple of strings and a float always serializes");
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone)]
pub struct CompletionCache {
    dir: PathBuf,
}

impl CompletionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CompletionCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    /// Look up an entry; `None` on miss. A corrupt entry is reported as an
    /// error rather than silently treated as a miss.
    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.entry_path(key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let entry: CacheEntry =
            serde_json::from_str(&raw).map_err(|e| Error::json(&path, e))?;
        if entry.key != key {
            return Err(Error::validation(
                &path,
                "key",
                format!("entry key {} does not match file name", entry.key),
            ));
        }
        Ok(Some(entry))
    }

    /// Store an entry. Existing entries win: the cache is write-once, so a
    /// concurrent writer that lost the rename race simply keeps the first
    /// value.
    pub fn put(&self, entry: &CacheEntry) -> Result<()> {
        let path = self.entry_path(&entry.key);
        if path.exists() {
            return Ok(());
        }
        let parent = path.parent().expect("entry path has a parent");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
        serde_json::to_writer_pretty(&mut tmp, entry).map_err(|e| {
            Error::io(&path, std::io::Error::new(std::io::ErrorKind::Other, e))
        })?;
        use std::io::Write;
        tmp.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(()),
            // Lost the race to another writer; the existing entry stands.
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => Ok(()),
            Err(e) => Err(Error::io(&path, e.error)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn entry(key: &str, text: &str) -> CacheEntry {
        CacheEntry {
            key: key.to_string(),
            response_text: text.to_string(),
            stored_at: Utc::now(),
        }
    }

    #[test]
    fn key_is_stable_and_sensitive_to_each_field() {
        let base = completion_key("model-a", "prompt", 0.0);
        assert_eq!(base, completion_key("model-a", "prompt", 0.0));
        assert_ne!(base, completion_key("model-b", "prompt", 0.0));
        assert_ne!(base, completion_key("model-a", "prompt!", 0.0));
        assert_ne!(base, completion_key("model-a", "prompt", 0.7));
        assert_eq!(base.len(), 64);
        assert!(base.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn temperature_alone_changes_the_key() {
        let a = completion_key("m", "same prompt", 0.0);
        let b = completion_key("m", "same prompt", 1.0);
        assert_ne!(a, b);
    }

    #[test]
    fn miss_then_hit_round_trip() {
        let dir = TempDir::new().unwrap();
        let cache = CompletionCache::new(dir.path());
        let key = completion_key("m", "p", 0.0);
        assert!(cache.get(&key).unwrap().is_none());
        let e = entry(&key, "the completion");
        cache.put(&e).unwrap();
        let got = cache.get(&key).unwrap().expect("hit after put");
        assert_eq!(got.response_text, "the completion");
        // Layout: first two hex chars as the shard directory.
        let shard = dir.path().join(&key[..2]).join(format!("{key}.json"));
        assert!(shard.is_file());
    }

    #[test]
    fn entries_are_write_once() {
        let dir = TempDir::new().unwrap();
        let cache = CompletionCache::new(dir.path());
        let key = completion_key("m", "p", 0.0);
        cache.put(&entry(&key, "first")).unwrap();
        cache.put(&entry(&key, "second")).unwrap();
        assert_eq!(cache.get(&key).unwrap().unwrap().response_text, "first");
    }

    #[test]
    fn corrupt_entry_is_an_error_not_a_miss() {
        let dir = TempDir::new().unwrap();
        let cache = CompletionCache::new(dir.path());
        let key = completion_key("m", "p", 0.0);
        let path = dir.path().join(&key[..2]).join(format!("{key}.json"));
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, "{ not json").unwrap();
        assert!(cache.get(&key).is_err());
    }

    #[test]
    fn concurrent_writers_settle_on_one_value() {
        let dir = TempDir::new().unwrap();
        let cache = CompletionCache::new(dir.path());
        let key = completion_key("m", "p", 0.0);
        std::thread::scope(|scope| {
            for i in 0..8 {
                let cache = &cache;
                let key = &key;
                scope.spawn(move || {
                    cache.put(&entry(key, &format!("writer-{i}"))).unwrap();
                });
            }
        });
        let text = cache.get(&key).unwrap().unwrap().response_text;
        assert!(text.starts_with("writer-"));
    }
}
