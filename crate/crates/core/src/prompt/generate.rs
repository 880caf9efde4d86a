//! Completion clients, SQL extraction, and the generation cache.
//!
//! The endpoint contract is a single JSON POST: the prompt plus sampling
//! settings in, `{"text": ...}` out. Any serving stack that speaks it can
//! back the harness; offline runs use the stubs in [`super::stub`].
//!
//! Responses are cached on disk, one file per (prompt hash, settings
//! fingerprint). A per-key lock guarantees at most one endpoint call per
//! distinct key no matter how many workers race on it.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::template::PromptRecord;
use crate::util::fnv1a64_hex;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("completion endpoint returned status {status}")]
    Endpoint { status: u16 },
    #[error("completion request timed out after {ms} ms")]
    Timeout { ms: u64 },
    #[error("completion transport failure: {reason}")]
    Transport { reason: String },
    #[error("generation cache entry {path} is corrupt: {reason}")]
    CacheCorruption { path: String, reason: String },
    #[error("generation cache io at {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model output contained no SQL after extraction")]
    EmptyOutput,
    #[error("stub has no answer for the question in this prompt")]
    UnknownCase,
}

/// Sampling settings sent with every completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub return_full_text: bool,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            temperature: 0.01,
            top_p: 0.7,
            max_new_tokens: 1024,
            return_full_text: false,
        }
    }
}

impl GenConfig {
    /// Short stable digest of the settings, part of every cache file name so
    /// records produced under different settings never collide.
    pub fn fingerprint(&self) -> String {
        fnv1a64_hex(
            format!(
                "{}|{}|{}|{}",
                self.temperature, self.top_p, self.max_new_tokens, self.return_full_text
            )
            .as_bytes(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    Http,
    Stub,
}

impl std::fmt::Display for ClientKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClientKind::Http => "http",
            ClientKind::Stub => "stub",
        })
    }
}

/// One completed generation, as stored in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prompt_hash: String,
    pub raw_output: String,
    pub extracted_sql: String,
    pub latency_ms: u64,
    pub client_kind: ClientKind,
}

/// A generation plus whether it was replayed from the cache. Replays return
/// the stored record unchanged, original latency included.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub record: GenerationRecord,
    pub from_cache: bool,
}

pub trait CompletionClient: Send + Sync {
    fn kind(&self) -> ClientKind;
    fn complete(&self, prompt: &str, config: &GenConfig) -> Result<String, GenError>;
}

/// Pulls the SQL out of a raw completion: drops an opening code fence, cuts
/// at the first closing fence or end-of-turn marker, and trims. Applying it
/// to its own output changes nothing.
pub fn extract_sql(raw_output: &str) -> Result<String, GenError> {
    let mut text = raw_output.trim_start();
    if let Some(rest) = text.strip_prefix("```sql") {
        text = rest;
    } else if let Some(rest) = text.strip_prefix("```") {
        text = rest;
    }
    if let Some(cut) = text.find("```") {
        text = &text[..cut];
    }
    if let Some(cut) = text.find("<|eot_id|>") {
        text = &text[..cut];
    }
    let text = text.trim();
    if text.is_empty() {
        return Err(GenError::EmptyOutput);
    }
    Ok(text.to_string())
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_new_tokens: u32,
    return_full_text: bool,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

/// Blocking HTTP client for the completion endpoint. Transport failures and
/// 5xx responses are retried twice with exponential backoff; 4xx responses
/// fail immediately.
pub struct HttpCompletionClient {
    endpoint: String,
    auth_token: Option<String>,
    client: reqwest::blocking::Client,
    timeout_ms: u64,
}

const RETRY_DELAYS_MS: [u64; 2] = [250, 1000];

impl HttpCompletionClient {
    pub fn new(
        endpoint: &str,
        auth_token: Option<String>,
        timeout_ms: u64,
    ) -> Result<HttpCompletionClient, GenError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| GenError::Transport {
                reason: e.to_string(),
            })?;
        Ok(HttpCompletionClient {
            endpoint: endpoint.to_string(),
            auth_token,
            client,
            timeout_ms,
        })
    }

    fn attempt(&self, prompt: &str, config: &GenConfig) -> Result<String, GenError> {
        let body = CompletionRequest {
            prompt,
            temperature: config.temperature,
            top_p: config.top_p,
            max_new_tokens: config.max_new_tokens,
            return_full_text: config.return_full_text,
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(token) = &self.auth_token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                GenError::Timeout {
                    ms: self.timeout_ms,
                }
            } else {
                GenError::Transport {
                    reason: e.to_string(),
                }
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(GenError::Endpoint {
                status: status.as_u16(),
            });
        }
        let parsed: CompletionResponse = response.json().map_err(|e| GenError::Transport {
            reason: format!("bad response body: {e}"),
        })?;
        Ok(parsed.text)
    }

    fn retryable(error: &GenError) -> bool {
        match error {
            GenError::Transport { .. } | GenError::Timeout { .. } => true,
            GenError::Endpoint { status } => *status >= 500,
            _ => false,
        }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn kind(&self) -> ClientKind {
        ClientKind::Http
    }

    fn complete(&self, prompt: &str, config: &GenConfig) -> Result<String, GenError> {
        let mut last = None;
        for (attempt, delay_ms) in std::iter::once(0u64)
            .chain(RETRY_DELAYS_MS.iter().copied())
            .enumerate()
        {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(delay_ms));
            }
            match self.attempt(prompt, config) {
                Ok(text) => return Ok(text),
                Err(e) if Self::retryable(&e) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Memory-and-disk cache in front of a completion client.
pub struct GenerationCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, GenerationRecord>>,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl GenerationCache {
    /// `dir` of None keeps records in memory only.
    pub fn new(dir: Option<&Path>) -> Result<GenerationCache, GenError> {
        if let Some(dir) = dir {
            std::fs::create_dir_all(dir).map_err(|e| GenError::CacheIo {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
        Ok(GenerationCache {
            dir: dir.map(Path::to_path_buf),
            memory: Mutex::new(HashMap::new()),
            in_flight: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    /// (hits, misses) over the lifetime of this cache instance.
    pub fn stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    fn entry_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn lookup(&self, key: &str, prompt_hash: &str) -> Result<Option<GenerationRecord>, GenError> {
        if let Some(record) = self.memory.lock().unwrap().get(key) {
            return Ok(Some(record.clone()));
        }
        let Some(path) = self.entry_path(key) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let bytes = std::fs::read(&path).map_err(|e| GenError::CacheIo {
            path: path.display().to_string(),
            source: e,
        })?;
        let record: GenerationRecord =
            serde_json::from_slice(&bytes).map_err(|e| GenError::CacheCorruption {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        if record.prompt_hash != prompt_hash {
            return Err(GenError::CacheCorruption {
                path: path.display().to_string(),
                reason: format!(
                    "stored prompt hash {} does not match requested {prompt_hash}",
                    record.prompt_hash
                ),
            });
        }
        self.memory
            .lock()
            .unwrap()
            .insert(key.to_string(), record.clone());
        Ok(Some(record))
    }

    fn store(&self, key: &str, record: &GenerationRecord) -> Result<(), GenError> {
        if let Some(path) = self.entry_path(key) {
            let bytes = serde_json::to_vec_pretty(record).expect("record serializes");
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, &bytes).map_err(|e| GenError::CacheIo {
                path: tmp.display().to_string(),
                source: e,
            })?;
            std::fs::rename(&tmp, &path).map_err(|e| GenError::CacheIo {
                path: path.display().to_string(),
                source: e,
            })?;
        }
        self.memory
            .lock()
            .unwrap()
            .insert(key.to_string(), record.clone());
        Ok(())
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        self.in_flight
            .lock()
            .unwrap()
            .entry(key.to_string())
            .or_default()
            .clone()
    }

    /// Returns the cached generation for (prompt, config) or produces one
    /// through `client`. Concurrent callers on the same key serialize behind
    /// a per-key lock, so the endpoint sees each key at most once.
    pub fn generate(
        &self,
        prompt: &PromptRecord,
        config: &GenConfig,
        client: &dyn CompletionClient,
    ) -> Result<Generation, GenError> {
        let prompt_hash = prompt.prompt_hash();
        let key = format!("{prompt_hash}.{}", config.fingerprint());

        if let Some(record) = self.lookup(&key, &prompt_hash)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Generation {
                record,
                from_cache: true,
            });
        }
        let lock = self.key_lock(&key);
        let _guard = lock.lock().unwrap();
        if let Some(record) = self.lookup(&key, &prompt_hash)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Generation {
                record,
                from_cache: true,
            });
        }

        let started = Instant::now();
        let raw_output = client.complete(&prompt.prompt_text, config)?;
        let latency_ms = started.elapsed().as_millis() as u64;
        let record = GenerationRecord {
            prompt_hash,
            extracted_sql: extract_sql(&raw_output)?,
            raw_output,
            latency_ms,
            client_kind: client.kind(),
        };
        self.store(&key, &record)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        Ok(Generation {
            record,
            from_cache: false,
        })
    }
}
