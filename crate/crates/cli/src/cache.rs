//! Content-addressed result cache with least-recently-used eviction.
//!
//! Records are `<key>.json`; a running job holds `<key>.lock`, and entries
//! with a lock are never evicted.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::report::Output;

pub const ENV_VAR: &str = "SAWLAB_CACHE";

/// `SAWLAB_CACHE`, then `--cache-dir`, then the user cache directory.
pub fn resolve_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(env) = std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(xdg).join("sawlab");
    }
    if let Some(home) = std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(home).join(".cache").join("sawlab");
    }
    std::env::temp_dir().join("sawlab-cache")
}

pub fn key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Cache {
    dir: PathBuf,
}

/// Removes the lock file on drop if this job created it.
pub struct LockGuard {
    path: Option<PathBuf>,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        if let Some(p) = &self.path {
            let _ = fs::remove_file(p);
        }
    }
}

impl Cache {
    pub fn open(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    fn record(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn lock(&self, key: &str) -> LockGuard {
        let path = self.dir.join(format!("{key}.lock"));
        let created = fs::OpenOptions::new().write(true).create_new(true).open(&path).is_ok();
        LockGuard {
            path: created.then_some(path),
        }
    }

    /// A readable record, with its modification time refreshed.
    pub fn get(&self, key: &str) -> Option<Output> {
        let path = self.record(key);
        let text = fs::read_to_string(&path).ok()?;
        let out = serde_json::from_str(&text).ok()?;
        if let Ok(f) = fs::OpenOptions::new().append(true).open(&path) {
            let _ = f.set_modified(SystemTime::now());
        }
        Some(out)
    }

    pub fn put(&self, key: &str, out: &Output) -> io::Result<()> {
        let tmp = self.dir.join(format!("{key}.tmp-{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(out).map_err(io::Error::other)?)?;
        fs::rename(&tmp, self.record(key))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GcSummary {
    pub entries_before: usize,
    pub bytes_before: u64,
    pub evicted: usize,
    pub skipped_locked: usize,
    pub entries_after: usize,
    pub bytes_after: u64,
}

/// Evicts the least recently used unlocked records until the total size of
/// records is at most `max_bytes`.
pub fn cache_gc(dir: &Path, max_bytes: u64) -> io::Result<GcSummary> {
    let meta = fs::metadata(dir)?;
    if !meta.is_dir() {
        return Err(io::Error::new(io::ErrorKind::NotFound, format!("{} is not a directory", dir.display())));
    }
    let mut entries = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        let path = e.path();
        if path.extension().and_then(|x| x.to_str()) != Some("json") {
            continue;
        }
        let m = e.metadata()?;
        entries.push((m.modified()?, path, m.len()));
    }
    entries.sort();
    let bytes_before: u64 = entries.iter().map(|e| e.2).sum();
    let entries_before = entries.len();
    let mut total = bytes_before;
    let mut evicted = 0;
    let mut skipped_locked = 0;
    for (_, path, len) in &entries {
        if total <= max_bytes {
            break;
        }
        if path.with_extension("lock").exists() {
            skipped_locked += 1;
            continue;
        }
        fs::remove_file(path)?;
        total -= len;
        evicted += 1;
    }
    Ok(GcSummary {
        entries_before,
        bytes_before,
        evicted,
        skipped_locked,
        entries_after: entries_before - evicted,
        bytes_after: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_parts() {
        assert_ne!(key(&["ab", "c"]), key(&["a", "bc"]));
        assert_eq!(key(&["x"]).len(), 64);
    }

    #[test]
    fn gc_on_missing_dir_errors() {
        assert!(cache_gc(Path::new("/nonexistent/sawlab/cache"), 0).is_err());
    }
}
