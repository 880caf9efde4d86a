//! Document embedding, flat top-k retrieval, and score statistics.

pub mod embedder;
pub mod index;
pub mod metrics;
pub mod vector;

pub use embedder::{
    build_embedder, CachedEmbedder, DeterministicEmbedder, EmbedError, Embedder, EmbedderKind,
    EmbedderSpec, HttpEmbedder,
};
pub use index::{
    build_index, corpus_content_hash, DistanceMetric, FlatIndex, IndexError, RetrievalResult,
    ScoredDoc,
};
pub use metrics::{
    aggregate_metrics, dcg, metrics_for, score_range, std_dev, AggregateRetrievalMetrics,
    MetricsError, RetrievalMetrics,
};
pub use vector::{cosine, l2, EmbeddingVector, VectorError};
