//! Flat exact-retrieval index.
//!
//! Every document vector is scanned for every query: no approximation, no
//! pruning. Scores are distances, so lower is better, and ties break by
//! table name to keep rankings reproducible.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::embedder::{EmbedError, Embedder};
use super::vector::{cosine, l2, EmbeddingVector, VectorError};
use crate::corpus::Corpus;
use crate::util::sha256_hex;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index is empty")]
    Empty,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("query text is empty")]
    EmptyQuery,
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("index file `{path}`: {reason}")]
    Persist { path: PathBuf, reason: String },
    #[error("stale index: {0}")]
    Stale(String),
}

/// Distance used to score a query against a document. Lower is better for
/// both choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    #[default]
    L2,
    OneMinusCosine,
}

impl DistanceMetric {
    pub fn score(&self, q: &EmbeddingVector, d: &EmbeddingVector) -> Result<f64, VectorError> {
        match self {
            DistanceMetric::L2 => l2(q, d),
            DistanceMetric::OneMinusCosine => Ok(1.0 - cosine(q, d)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub table_name: String,
    pub score: f64,
    /// 1-based rank within the result list.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query_id: String,
    pub k: usize,
    pub items: Vec<ScoredDoc>,
}

impl RetrievalResult {
    pub fn scores(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.score).collect()
    }

    pub fn table_names(&self) -> Vec<String> {
        self.items.iter().map(|i| i.table_name.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexEntry {
    table_name: String,
    vector: EmbeddingVector,
}

/// In-memory flat index over one corpus variant.
#[derive(Debug, Serialize, Deserialize)]
pub struct FlatIndex {
    embedder_id: String,
    corpus_hash: String,
    dim: usize,
    metric: DistanceMetric,
    entries: Vec<IndexEntry>,
}

/// Fingerprint of the corpus content an index was built from. Any change to
/// a document's text, the variant, or the set of tables changes the hash.
pub fn corpus_content_hash(corpus: &Corpus) -> String {
    let mut buf = String::new();
    buf.push_str(corpus.variant.label());
    for doc in &corpus.documents {
        buf.push('\u{1}');
        buf.push_str(&doc.table_name);
        buf.push('\u{2}');
        buf.push_str(&doc.text);
    }
    sha256_hex(buf.as_bytes())
}

/// Embeds every document and assembles the index.
pub fn build_index(
    corpus: &Corpus,
    embedder: &dyn Embedder,
    metric: DistanceMetric,
) -> Result<FlatIndex, IndexError> {
    if corpus.documents.is_empty() {
        return Err(IndexError::Empty);
    }
    let texts: Vec<String> = corpus.documents.iter().map(|d| d.text.clone()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let entries = corpus
        .documents
        .iter()
        .zip(vectors)
        .map(|(doc, vector)| IndexEntry {
            table_name: doc.table_name.clone(),
            vector,
        })
        .collect();
    Ok(FlatIndex {
        embedder_id: embedder.id(),
        corpus_hash: corpus_content_hash(corpus),
        dim: embedder.dim(),
        metric,
        entries,
    })
}

impl FlatIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    pub fn corpus_hash(&self) -> &str {
        &self.corpus_hash
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    /// Scores every document against the query and returns the best
    /// `min(k, len)` in ascending score order. Equal scores order by table
    /// name.
    pub fn retrieve(
        &self,
        embedder: &dyn Embedder,
        query_id: &str,
        query_text: &str,
        k: usize,
    ) -> Result<RetrievalResult, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query_text.trim().is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        if self.entries.is_empty() {
            return Err(IndexError::Empty);
        }
        let query_vec = embedder.embed(query_text)?;
        let mut scored: Vec<(f64, &str)> = Vec::with_capacity(self.entries.len());
        for entry in &self.entries {
            let score = self.metric.score(&query_vec, &entry.vector)?;
            scored.push((score, entry.table_name.as_str()));
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let items = scored
            .into_iter()
            .take(k.min(self.entries.len()))
            .enumerate()
            .map(|(i, (score, name))| ScoredDoc {
                table_name: name.to_string(),
                score,
                rank: i + 1,
            })
            .collect();
        Ok(RetrievalResult {
            query_id: query_id.to_string(),
            k,
            items,
        })
    }

    /// Writes the index as a JSON sidecar.
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| IndexError::Persist {
                path: parent.to_path_buf(),
                reason: e.to_string(),
            })?;
        }
        let json = serde_json::to_string_pretty(self).expect("index serializes");
        std::fs::write(path, json).map_err(|e| IndexError::Persist {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Loads a sidecar and checks it still matches the corpus and embedder
    /// it will be used with.
    pub fn load(
        path: &Path,
        corpus: &Corpus,
        embedder: &dyn Embedder,
    ) -> Result<FlatIndex, IndexError> {
        let bytes = std::fs::read(path).map_err(|e| IndexError::Persist {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let index: FlatIndex = serde_json::from_slice(&bytes).map_err(|e| IndexError::Persist {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if index.dim != embedder.dim() {
            return Err(IndexError::Stale(format!(
                "index dim {} != embedder dim {}",
                index.dim,
                embedder.dim()
            )));
        }
        if index.embedder_id != embedder.id() {
            return Err(IndexError::Stale(format!(
                "index embedder `{}` != active embedder `{}`",
                index.embedder_id,
                embedder.id()
            )));
        }
        let expected = corpus_content_hash(corpus);
        if index.corpus_hash != expected {
            return Err(IndexError::Stale(
                "corpus content changed since the index was built".to_string(),
            ));
        }
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, parse_ddl, DocVariant};
    use crate::retrieval::embedder::DeterministicEmbedder;
    use std::collections::BTreeMap;

    fn corpus() -> Corpus {
        let ddl = r#"
CREATE TABLE "farm" ("Farm_ID" int, "Total_Horses" real, PRIMARY KEY ("Farm_ID"));
CREATE TABLE "city" ("City_ID" int, "Population" real, PRIMARY KEY ("City_ID"));
CREATE TABLE "singer" ("Singer_ID" int, "Age" int, PRIMARY KEY ("Singer_ID"));
"#;
        let schemas = parse_ddl(ddl).unwrap();
        build_corpus(&schemas, DocVariant::V2, 42, &BTreeMap::new()).unwrap()
    }

    fn index_and_embedder() -> (FlatIndex, DeterministicEmbedder) {
        let embedder = DeterministicEmbedder::default();
        let index = build_index(&corpus(), &embedder, DistanceMetric::L2).unwrap();
        (index, embedder)
    }

    /// Brute-force oracle: score every entry directly and sort.
    fn oracle_ranking(
        corpus: &Corpus,
        embedder: &dyn Embedder,
        metric: DistanceMetric,
        query: &str,
    ) -> Vec<(String, f64)> {
        let q = embedder.embed(query).unwrap();
        let mut all: Vec<(String, f64)> = corpus
            .documents
            .iter()
            .map(|d| {
                let v = embedder.embed(&d.text).unwrap();
                (d.table_name.clone(), metric.score(&q, &v).unwrap())
            })
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        all
    }

    #[test]
    fn retrieve_matches_brute_force_oracle() {
        let corpus = corpus();
        let embedder = DeterministicEmbedder::default();
        for metric in [DistanceMetric::L2, DistanceMetric::OneMinusCosine] {
            let index = build_index(&corpus, &embedder, metric).unwrap();
            let expected = oracle_ranking(&corpus, &embedder, metric, "how many horses per farm");
            let result = index
                .retrieve(&embedder, "q1", "how many horses per farm", 3)
                .unwrap();
            for (item, (name, score)) in result.items.iter().zip(expected.iter()) {
                assert_eq!(&item.table_name, name);
                assert!((item.score - score).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_larger_than_corpus_returns_everything() {
        let (index, embedder) = index_and_embedder();
        let result = index
            .retrieve(&embedder, "q1", "population of cities", 10)
            .unwrap();
        assert_eq!(result.items.len(), 3);
        assert_eq!(result.k, 10);
    }

    #[test]
    fn scores_ascend_and_ranks_count_up() {
        let (index, embedder) = index_and_embedder();
        let result = index.retrieve(&embedder, "q1", "singer age", 3).unwrap();
        for pair in result.items.windows(2) {
            assert!(pair[0].score <= pair[1].score);
        }
        for (i, item) in result.items.iter().enumerate() {
            assert_eq!(item.rank, i + 1);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let (index, embedder) = index_and_embedder();
        assert!(matches!(
            index.retrieve(&embedder, "q", "text", 0),
            Err(IndexError::InvalidK)
        ));
        assert!(matches!(
            index.retrieve(&embedder, "q", "  ", 3),
            Err(IndexError::EmptyQuery)
        ));
    }

    #[test]
    fn save_load_roundtrip_validates_corpus_and_embedder() {
        let corpus = corpus();
        let embedder = DeterministicEmbedder::default();
        let index = build_index(&corpus, &embedder, DistanceMetric::L2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        index.save(&path).unwrap();

        let loaded = FlatIndex::load(&path, &corpus, &embedder).unwrap();
        let a = index.retrieve(&embedder, "q", "farm horses", 3).unwrap();
        let b = loaded.retrieve(&embedder, "q", "farm horses", 3).unwrap();
        assert_eq!(a, b);

        // Different embedder dim must be rejected.
        let other = DeterministicEmbedder::new(16).unwrap();
        assert!(matches!(
            FlatIndex::load(&path, &corpus, &other),
            Err(IndexError::Stale(_))
        ));

        // Changed corpus content must be rejected.
        let mut changed = corpus.clone();
        changed.documents[0].text.push_str("\n-- drift");
        assert!(matches!(
            FlatIndex::load(&path, &changed, &embedder),
            Err(IndexError::Stale(_))
        ));
    }

    #[test]
    fn tied_scores_break_by_table_name() {
        // Two documents with identical text embed identically, forcing a tie.
        let ddl = r#"
CREATE TABLE "b_table" ("x" int);
CREATE TABLE "a_table" ("x" int);
"#;
        let schemas = parse_ddl(ddl).unwrap();
        let mut corpus = build_corpus(&schemas, DocVariant::V2, 1, &BTreeMap::new()).unwrap();
        corpus.documents[0].text = "same text".to_string();
        corpus.documents[1].text = "same text".to_string();
        let embedder = DeterministicEmbedder::default();
        let index = build_index(&corpus, &embedder, DistanceMetric::L2).unwrap();
        let result = index.retrieve(&embedder, "q", "same text", 2).unwrap();
        assert_eq!(result.items[0].table_name, "a_table");
        assert_eq!(result.items[1].table_name, "b_table");
        assert_eq!(result.items[0].score, result.items[1].score);
    }
}
