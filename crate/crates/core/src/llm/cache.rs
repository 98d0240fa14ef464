use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatResponse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheMode {
    /// Hits are served, misses go to the network and are stored.
    Record,
    /// Hits are served, misses are errors.
    Replay,
}

impl FromStr for CacheMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            other => Err(Error::Config(format!("unknown cache mode {other:?}"))),
        }
    }
}

/// sha256 over the request's canonical JSON.
pub fn request_key(request: &ChatRequest) -> String {
    let canonical = serde_json::to_vec(request).expect("request serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    entries: BTreeMap<String, ChatResponse>,
}

pub struct ReplayCache {
    mode: CacheMode,
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, ChatResponse>>,
}

impl ReplayCache {
    pub fn in_memory(mode: CacheMode) -> Self {
        Self {
            mode,
            path: None,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    /// Opens `path`; a missing file starts empty in record mode.
    pub fn open(path: &Path, mode: CacheMode) -> Result<Self> {
        let entries = match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str::<CacheFile>(&text)?.entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && mode == CacheMode::Record => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            mode,
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
        })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, key: &str) -> Option<ChatResponse> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    pub fn insert(&self, request: &ChatRequest, response: ChatResponse) {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(request_key(request), response);
    }

    /// In-memory copy of the current entries under `mode`.
    pub fn snapshot(&self, mode: CacheMode) -> ReplayCache {
        ReplayCache {
            mode,
            path: None,
            entries: Mutex::new(self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone()),
        }
    }

    pub(crate) fn store(&self, key: &str, response: &ChatResponse) -> Result<()> {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key.to_string(), response.clone());
        self.flush()
    }

    pub fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let entries = self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone();
        let text = serde_json::to_string_pretty(&CacheFile { entries })?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ResponseFormat;

    fn req(user: &str) -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            system: "s".into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens: 10,
            format: ResponseFormat::Text,
        }
    }

    fn resp(content: &str) -> ChatResponse {
        ChatResponse {
            content: content.into(),
            prompt_tokens: 1,
            completion_tokens: 1,
            model: "m".into(),
            latency_ms: 0,
            attempts: 1,
        }
    }

    #[test]
    fn key_is_stable_and_content_sensitive() {
        assert_eq!(request_key(&req("a")), request_key(&req("a")));
        assert_ne!(request_key(&req("a")), request_key(&req("b")));
        assert_eq!(request_key(&req("a")).len(), 64);
    }

    #[test]
    fn round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let c = ReplayCache::open(&path, CacheMode::Record).unwrap();
        c.store(&request_key(&req("a")), &resp("x")).unwrap();
        let back = ReplayCache::open(&path, CacheMode::Replay).unwrap();
        assert_eq!(back.lookup(&request_key(&req("a"))).unwrap().content, "x");
        assert!(back.lookup(&request_key(&req("b"))).is_none());
    }

    #[test]
    fn replay_of_missing_file_is_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ReplayCache::open(&dir.path().join("none.json"), CacheMode::Replay).is_err());
    }
}
