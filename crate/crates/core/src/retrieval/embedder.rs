//! Text embedders: a remote HTTP endpoint, a deterministic local embedder
//! for tests, and a caching wrapper shared by both.
//!
//! The HTTP contract is `POST {"texts": [..]}` returning
//! `{"vectors": [[..], ..]}` with one vector per input, in order.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vector::EmbeddingVector;
use crate::util::{fnv1a64_hex, parallel_map};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid embedder spec: {0}")]
    InvalidSpec(String),
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding endpoint returned status {status}")]
    Endpoint { status: u16 },
    #[error("embedding transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("endpoint returned a {got}-dim vector, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid vector from endpoint: {0}")]
    BadVector(String),
    #[error("embedding cache failure at `{path}`: {reason}")]
    Cache { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    HttpEndpoint,
    DeterministicTest,
}

/// Declarative embedder configuration as it appears in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub endpoint: Option<String>,
    pub dim: usize,
    pub batch_size: usize,
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec {
            kind: EmbedderKind::DeterministicTest,
            endpoint: None,
            dim: DeterministicEmbedder::DEFAULT_DIM,
            batch_size: 16,
        }
    }
}

impl EmbedderSpec {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidSpec("dim must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(EmbedError::InvalidSpec(
                "batch_size must be positive".into(),
            ));
        }
        match self.kind {
            EmbedderKind::HttpEndpoint => {
                if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return Err(EmbedError::InvalidSpec(
                        "http-endpoint embedder requires an endpoint".into(),
                    ));
                }
            }
            EmbedderKind::DeterministicTest => {}
        }
        Ok(())
    }
}

pub trait Embedder: Send + Sync {
    /// Stable identifier that namespaces cache entries.
    fn id(&self) -> String;

    fn dim(&self) -> usize;

    /// Embeds a batch, one vector per text, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        Ok(out.remove(0))
    }
}

/// Hash-bucketed bag-of-words embedder. Tokens are lowercased alphanumeric
/// runs, each bumping one bucket chosen by FNV-1a; the result is
/// L2-normalized. Token order never matters, so reorderings of the same
/// material embed identically, while added material shifts the vector.
#[derive(Debug, Clone)]
pub struct DeterministicEmbedder {
    dim: usize,
}

impl DeterministicEmbedder {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(dim: usize) -> Result<DeterministicEmbedder, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::InvalidSpec("dim must be positive".into()));
        }
        Ok(DeterministicEmbedder { dim })
    }
}

impl Default for DeterministicEmbedder {
    fn default() -> Self {
        DeterministicEmbedder {
            dim: Self::DEFAULT_DIM,
        }
    }
}

impl Embedder for DeterministicEmbedder {
    fn id(&self) -> String {
        format!("deterministic-test-d{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts
            .iter()
            .map(|text| {
                if text.trim().is_empty() {
                    return Err(EmbedError::EmptyText);
                }
                let mut buckets = vec![0.0f64; self.dim];
                let lowered = text.to_lowercase();
                let mut any = false;
                for token in lowered.split(|c: char| !c.is_alphanumeric()) {
                    if token.is_empty() {
                        continue;
                    }
                    any = true;
                    let bucket = crate::util::fnv1a64(token.as_bytes()) as usize % self.dim;
                    buckets[bucket] += 1.0;
                }
                if !any {
                    let bucket = crate::util::fnv1a64(lowered.as_bytes()) as usize % self.dim;
                    buckets[bucket] = 1.0;
                }
                let norm = buckets.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in &mut buckets {
                    *v /= norm;
                }
                EmbeddingVector::new(buckets).map_err(|e| EmbedError::BadVector(e.to_string()))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Blocking HTTP embedder. Batches of `spec.batch_size` texts are sent with
/// a bounded number of concurrent requests; responses are reassembled in
/// input order.
pub struct HttpEmbedder {
    spec: EmbedderSpec,
    auth_token: Option<String>,
    concurrency: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(
        spec: EmbedderSpec,
        auth_token: Option<String>,
        concurrency: usize,
    ) -> Result<HttpEmbedder, EmbedError> {
        spec.validate()?;
        if spec.kind != EmbedderKind::HttpEndpoint {
            return Err(EmbedError::InvalidSpec(
                "HttpEmbedder requires kind = http-endpoint".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(HttpEmbedder {
            spec,
            auth_token,
            concurrency: concurrency.max(1),
            client,
        })
    }

    fn post_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let endpoint = self.spec.endpoint.as_deref().expect("validated spec");
        let mut request = self.client.post(endpoint).json(&EmbedRequest { texts });
        if let Some(token) = &self.auth_token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(EmbedError::Endpoint {
                status: status.as_u16(),
            });
        }
        let body: EmbedResponse = response
            .json()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                expected: texts.len(),
                got: body.vectors.len(),
            });
        }
        body.vectors
            .into_iter()
            .map(|values| {
                if values.len() != self.spec.dim {
                    return Err(EmbedError::DimMismatch {
                        expected: self.spec.dim,
                        got: values.len(),
                    });
                }
                EmbeddingVector::new(values).map_err(|e| EmbedError::BadVector(e.to_string()))
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        let endpoint = self.spec.endpoint.as_deref().unwrap_or("");
        format!(
            "http-d{}-{}",
            self.spec.dim,
            fnv1a64_hex(endpoint.as_bytes())
        )
    }

    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        for text in texts {
            if text.trim().is_empty() {
                return Err(EmbedError::EmptyText);
            }
        }
        let chunks: Vec<&[String]> = texts.chunks(self.spec.batch_size).collect();
        let results = parallel_map(&chunks, self.concurrency, |_, chunk| self.post_batch(chunk));
        let mut out = Vec::with_capacity(texts.len());
        for result in results {
            out.extend(result?);
        }
        Ok(out)
    }
}

/// Content-addressed cache around any embedder. Hits are served from memory
/// first, then from one JSON file per text under
/// `<dir>/<embedder_id>/<hash>.json`; misses go to the inner embedder in a
/// single batch and are written back. Results always line up with the input
/// order.
pub struct CachedEmbedder {
    inner: Box<dyn Embedder>,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, EmbeddingVector>>,
}

impl CachedEmbedder {
    pub fn new(inner: Box<dyn Embedder>, dir: Option<PathBuf>) -> CachedEmbedder {
        CachedEmbedder {
            inner,
            dir,
            memory: Mutex::new(HashMap::new()),
        }
    }

    fn text_key(&self, text: &str) -> String {
        crate::util::sha256_hex(text.as_bytes())
    }

    fn disk_path(&self, key: &str) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let id: String = self
            .inner
            .id()
            .chars()
            .map(|c| {
                if c.is_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        Some(dir.join(id).join(format!("{key}.json")))
    }

    fn disk_read(&self, key: &str) -> Option<EmbeddingVector> {
        let path = self.disk_path(key)?;
        let bytes = std::fs::read(&path).ok()?;
        let vector: EmbeddingVector = serde_json::from_slice(&bytes).ok()?;
        (vector.dim() == self.inner.dim()).then_some(vector)
    }

    fn disk_write(&self, key: &str, vector: &EmbeddingVector) -> Result<(), EmbedError> {
        let Some(path) = self.disk_path(key) else {
            return Ok(());
        };
        let parent = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(parent).map_err(|e| EmbedError::Cache {
            path: parent.to_path_buf(),
            reason: e.to_string(),
        })?;
        let bytes = serde_json::to_vec(vector).expect("vector serializes");
        std::fs::write(&path, bytes).map_err(|e| EmbedError::Cache {
            path,
            reason: e.to_string(),
        })
    }
}

impl Embedder for CachedEmbedder {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let keys: Vec<String> = texts.iter().map(|t| self.text_key(t)).collect();
        let mut slots: Vec<Option<EmbeddingVector>> = vec![None; texts.len()];
        let mut miss_indices: Vec<usize> = Vec::new();
        {
            let memory = self.memory.lock().expect("embed cache poisoned");
            for (i, key) in keys.iter().enumerate() {
                if let Some(v) = memory.get(key) {
                    slots[i] = Some(v.clone());
                }
            }
        }
        for (i, key) in keys.iter().enumerate() {
            if slots[i].is_none() {
                if let Some(v) = self.disk_read(key) {
                    self.memory
                        .lock()
                        .expect("embed cache poisoned")
                        .insert(key.clone(), v.clone());
                    slots[i] = Some(v);
                } else {
                    miss_indices.push(i);
                }
            }
        }
        if !miss_indices.is_empty() {
            let miss_texts: Vec<String> = miss_indices.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.inner.embed_batch(&miss_texts)?;
            if vectors.len() != miss_texts.len() {
                return Err(EmbedError::CountMismatch {
                    expected: miss_texts.len(),
                    got: vectors.len(),
                });
            }
            for (&i, vector) in miss_indices.iter().zip(vectors) {
                self.disk_write(&keys[i], &vector)?;
                self.memory
                    .lock()
                    .expect("embed cache poisoned")
                    .insert(keys[i].clone(), vector.clone());
                slots[i] = Some(vector);
            }
        }
        Ok(slots.into_iter().map(|s| s.expect("slot filled")).collect())
    }
}

/// Builds the embedder described by `spec`, wrapped in a cache when
/// `cache_dir` is given.
pub fn build_embedder(
    spec: &EmbedderSpec,
    auth_token: Option<String>,
    concurrency: usize,
    cache_dir: Option<PathBuf>,
) -> Result<CachedEmbedder, EmbedError> {
    spec.validate()?;
    let inner: Box<dyn Embedder> = match spec.kind {
        EmbedderKind::DeterministicTest => Box::new(DeterministicEmbedder::new(spec.dim)?),
        EmbedderKind::HttpEndpoint => {
            Box::new(HttpEmbedder::new(spec.clone(), auth_token, concurrency)?)
        }
    };
    Ok(CachedEmbedder::new(inner, cache_dir))
}
