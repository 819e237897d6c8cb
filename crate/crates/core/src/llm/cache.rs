use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use super::{Completion, EndpointConfig};
use crate::util::{atomic_write, sha256_hex};

/// Completions keyed by endpoint settings and prompt digest.
///
/// On disk every entry is its own `<key>.json` written through a rename, so
/// a new entry never rewrites an existing one and readers never observe a
/// partial file.
#[derive(Debug)]
pub struct ResponseCache {
    enabled: bool,
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, Completion>>,
    hits: AtomicUsize,
}

impl ResponseCache {
    fn with(enabled: bool, dir: Option<PathBuf>) -> Self {
        Self {
            enabled,
            dir,
            memory: RwLock::new(HashMap::new()),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn in_memory() -> Self {
        Self::with(true, None)
    }

    pub fn on_disk(cache_dir: impl Into<PathBuf>) -> Self {
        Self::with(true, Some(cache_dir.into().join("llm")))
    }

    /// Every lookup misses and nothing is stored.
    pub fn disabled() -> Self {
        Self::with(false, None)
    }

    pub fn key(config: &EndpointConfig, prompt_digest: &str) -> String {
        let material = serde_json::json!([
            config.base_url,
            config.model_id,
            config.temperature.to_string(),
            config.max_tokens,
            prompt_digest,
        ]);
        sha256_hex(material.to_string().as_bytes())
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn get(&self, key: &str) -> Option<Completion> {
        if !self.enabled {
            return None;
        }
        let cached = self.memory.read().expect("cache lock poisoned").get(key).cloned();
        let found = cached.or_else(|| {
            let dir = self.dir.as_ref()?;
            let bytes = std::fs::read(dir.join(format!("{key}.json"))).ok()?;
            let completion: Completion = serde_json::from_slice(&bytes).ok()?;
            self.memory
                .write()
                .expect("cache lock poisoned")
                .insert(key.to_string(), completion.clone());
            Some(completion)
        });
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        found
    }

    pub fn put(&self, key: &str, completion: &Completion) {
        if !self.enabled {
            return;
        }
        self.memory
            .write()
            .expect("cache lock poisoned")
            .insert(key.to_string(), completion.clone());
        if let Some(dir) = &self.dir {
            let body = serde_json::to_vec(completion).expect("completion serializes");
            if let Err(e) = atomic_write(&dir.join(format!("{key}.json")), &body) {
                log::warn!("could not persist cached completion {key}: {e}");
            }
        }
    }
}
