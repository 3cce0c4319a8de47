//! Append-only prompt cache and the completion client used by the pipeline.
//!
//! Records are JSON lines keyed by the SHA-256 of the filled prompt, a NUL
//! byte and the model id. The first record for a key wins, so replaying a
//! cache always returns the response that was originally recorded.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hoi_core::priors::CompletionClient;

use crate::error::{format_error, io_error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub key: String,
    pub template_id: String,
    pub prompt: String,
    pub response: String,
    pub model: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn cache_key(prompt: &str, model: &str) -> String {
    let mut h = Sha256::new();
    h.update(prompt.as_bytes());
    h.update([0u8]);
    h.update(model.as_bytes());
    format!("{:x}", h.finalize())
}

/// Concurrent readers, serialized writers.
#[derive(Debug)]
pub struct PromptCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, PromptRecord>>,
    writer: Mutex<()>,
}

impl PromptCache {
    /// Loads the cache file; a missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(io_error(path))?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: PromptRecord =
                    serde_json::from_str(line).map_err(|e| format_error(path, n + 1, e.to_string()))?;
                if rec.key != cache_key(&rec.prompt, &rec.model) {
                    return Err(format_error(path, n + 1, "key does not match prompt and model"));
                }
                entries.entry(rec.key.clone()).or_insert(rec);
            }
        }
        Ok(PromptCache { path: path.to_path_buf(), entries: RwLock::new(entries), writer: Mutex::new(()) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, prompt: &str, model: &str) -> Option<PromptRecord> {
        self.entries.read().expect("cache lock").get(&cache_key(prompt, model)).cloned()
    }

    /// Appends a record to the file unless its key is already present.
    pub fn record(&self, template_id: &str, prompt: &str, model: &str, response: &str) -> Result<PromptRecord> {
        let _guard = self.writer.lock().expect("cache writer");
        if let Some(existing) = self.get(prompt, model) {
            return Ok(existing);
        }
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let rec = PromptRecord {
            key: cache_key(prompt, model),
            template_id: template_id.into(),
            prompt: prompt.into(),
            response: response.into(),
            model: model.into(),
            timestamp,
        };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io_error(&self.path))?;
        let line = serde_json::to_string(&rec).expect("serializable") + "\n";
        f.write_all(line.as_bytes()).map_err(io_error(&self.path))?;
        self.entries.write().expect("cache lock").insert(rec.key.clone(), rec.clone());
        Ok(rec)
    }
}

/// A live completion backend.
pub trait LiveCompletion: Send + Sync {
    fn complete(&self, prompt: &str) -> std::result::Result<String, String>;
}

/// Serves completions from the cache and, when allowed, records live
/// completions for prompts the cache lacks.
pub struct PriorClient {
    cache: PromptCache,
    model: String,
    live: Option<Box<dyn LiveCompletion>>,
}

impl PriorClient {
    /// Replay only: a cache miss is an error.
    pub fn offline(cache: PromptCache, model: &str) -> Self {
        PriorClient { cache, model: model.into(), live: None }
    }

    pub fn with_live(cache: PromptCache, model: &str, live: Box<dyn LiveCompletion>) -> Self {
        PriorClient { cache, model: model.into(), live: Some(live) }
    }

    pub fn cache(&self) -> &PromptCache {
        &self.cache
    }
}

impl CompletionClient for PriorClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, template_id: &str, prompt: &str) -> hoi_core::Result<String> {
        if let Some(rec) = self.cache.get(prompt, &self.model) {
            return Ok(rec.response);
        }
        let Some(live) = &self.live else {
            return Err(hoi_core::Error::Client(format!(
                "no cached `{template_id}` response for model {} (key {}) and network access is disabled",
                self.model,
                cache_key(prompt, &self.model)
            )));
        };
        let response = live.complete(prompt).map_err(hoi_core::Error::Client)?;
        self.cache
            .record(template_id, prompt, &self.model, &response)
            .map_err(|e| hoi_core::Error::Client(e.to_string()))?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hoi_core::priors::{query_object_size, render_size_prompt, SIZE_TEMPLATE_ID};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Counting(Arc<AtomicUsize>, &'static str);

    impl LiveCompletion for Counting {
        fn complete(&self, _: &str) -> std::result::Result<String, String> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(self.1.into())
        }
    }

    #[test]
    fn key_is_sha256_of_prompt_nul_model() {
        // printf 'a\0m' | sha256sum
        assert_eq!(cache_key("a", "m"), "10d64fdc93fe17e005220321d9ff7d0101dcb8e2d93faf2f843be6cf6772ade4");
        assert_ne!(cache_key("ab", "m"), cache_key("a", "bm"));
    }

    #[test]
    fn live_responses_are_recorded_and_replayed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let calls = Arc::new(AtomicUsize::new(0));
        let client = PriorClient::with_live(
            PromptCache::open(&path).unwrap(),
            "m1",
            Box::new(Counting(calls.clone(), " about 0.75 m tall")),
        );
        let live = query_object_size("stool", &client).unwrap();
        let again = query_object_size("stool", &client).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(live, again);

        let replay = PriorClient::offline(PromptCache::open(&path).unwrap(), "m1");
        assert_eq!(query_object_size("stool", &replay).unwrap(), live);
        assert_eq!(live.size, 0.75);
        let rec = replay.cache().get(&render_size_prompt("stool"), "m1").unwrap();
        assert_eq!(rec.template_id, SIZE_TEMPLATE_ID);

        // Another model id misses, and offline clients refuse to go live.
        let other = PriorClient::offline(PromptCache::open(&path).unwrap(), "m2");
        let err = query_object_size("stool", &other).unwrap_err();
        assert!(err.to_string().contains("network access is disabled"), "{err}");
    }

    #[test]
    fn first_record_wins_and_tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let cache = PromptCache::open(&path).unwrap();
        cache.record("t", "p", "m", "first").unwrap();
        cache.record("t", "p", "m", "second").unwrap();
        let reopened = PromptCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        assert_eq!(reopened.get("p", "m").unwrap().response, "first");

        let text = std::fs::read_to_string(&path).unwrap().replace("\"p\"", "\"q\"");
        std::fs::write(&path, text).unwrap();
        assert!(PromptCache::open(&path).is_err());
    }
}
