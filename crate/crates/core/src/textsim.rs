//! Text-level similarity between gold and generated SQL.
//!
//! Three judgments are produced per pair, each with its own threshold:
//!
//! * normalized edit distance (`levenshtein / max(len)`), similar when the
//!   value is strictly below `edit_max`;
//! * embedding cosine similarity, similar when strictly above `embed_min`;
//! * token-sort fuzzy ratio in 0..=100, similar when at least `fuzzy_min`.
//!
//! Inputs are whitespace-canonicalized first (runs collapse to one space,
//! ends trimmed) so formatting alone never separates two queries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::embedder::{EmbedError, Embedder};
use crate::retrieval::vector::{cosine, VectorError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("both texts are empty")]
    BothEmpty,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Decision thresholds for the three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityThresholds {
    /// Similar when normalized edit distance < this. In [0, 1].
    pub edit_max: f64,
    /// Similar when cosine similarity > this. In [-1, 1].
    pub embed_min: f64,
    /// Similar when fuzzy ratio >= this. In 0..=100.
    pub fuzzy_min: i64,
}

impl Default for SimilarityThresholds {
    fn default() -> Self {
        SimilarityThresholds {
            edit_max: 0.5,
            embed_min: 0.85,
            fuzzy_min: 75,
        }
    }
}

impl SimilarityThresholds {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.edit_max) {
            return Err(SimError::InvalidThresholds(format!(
                "edit_max {} outside [0, 1]",
                self.edit_max
            )));
        }
        if !(-1.0..=1.0).contains(&self.embed_min) {
            return Err(SimError::InvalidThresholds(format!(
                "embed_min {} outside [-1, 1]",
                self.embed_min
            )));
        }
        if !(0..=100).contains(&self.fuzzy_min) {
            return Err(SimError::InvalidThresholds(format!(
                "fuzzy_min {} outside 0..=100",
                self.fuzzy_min
            )));
        }
        Ok(())
    }
}

/// All three judgments for one gold/generated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSimilarityReport {
    pub edit_value: f64,
    pub edit_similar: bool,
    pub embed_value: f64,
    pub embed_similar: bool,
    pub fuzzy_value: i64,
    pub fuzzy_similar: bool,
}

/// Collapses whitespace runs to single spaces and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Character-level Levenshtein distance with the usual two-row DP.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr: Vec<usize> = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

fn canonical_pair(gold: &str, gen: &str) -> Result<(String, String), SimError> {
    let g = normalize_whitespace(gold);
    let h = normalize_whitespace(gen);
    if g.is_empty() && h.is_empty() {
        return Err(SimError::BothEmpty);
    }
    Ok((g, h))
}

/// Levenshtein distance divided by the longer length, plus the similarity
/// judgment under `thresholds.edit_max`.
pub fn normalized_edit_distance(
    gold: &str,
    gen: &str,
    thresholds: &SimilarityThresholds,
) -> Result<(f64, bool), SimError> {
    thresholds.validate()?;
    let (g, h) = canonical_pair(gold, gen)?;
    let max_len = g.chars().count().max(h.chars().count());
    let value = levenshtein(&g, &h) as f64 / max_len as f64;
    Ok((value, value < thresholds.edit_max))
}

/// Token-sort ratio: both texts are lowercased, split on whitespace, their
/// tokens sorted and rejoined, then scored as
/// `round(100 * (1 - levenshtein / max(len)))`.
pub fn fuzzy_ratio(
    gold: &str,
    gen: &str,
    thresholds: &SimilarityThresholds,
) -> Result<(i64, bool), SimError> {
    thresholds.validate()?;
    let (g, h) = canonical_pair(gold, gen)?;
    let sort_tokens = |s: &str| -> String {
        let mut tokens: Vec<&str> = s.split_whitespace().collect();
        tokens.sort_unstable();
        tokens.join(" ")
    };
    let g = sort_tokens(&g.to_lowercase());
    let h = sort_tokens(&h.to_lowercase());
    let max_len = g.chars().count().max(h.chars().count());
    let value = if max_len == 0 {
        100
    } else {
        (100.0 * (1.0 - levenshtein(&g, &h) as f64 / max_len as f64)).round() as i64
    };
    Ok((value, value >= thresholds.fuzzy_min))
}

/// Cosine similarity between the embeddings of the two texts.
pub fn embedding_similarity(
    gold: &str,
    gen: &str,
    embedder: &dyn Embedder,
    thresholds: &SimilarityThresholds,
) -> Result<(f64, bool), SimError> {
    thresholds.validate()?;
    let (g, h) = canonical_pair(gold, gen)?;
    if g.is_empty() || h.is_empty() {
        // One side empty: nothing to embed, nothing similar.
        return Ok((0.0, false));
    }
    let vg = embedder.embed(&g)?;
    let vh = embedder.embed(&h)?;
    let value = cosine(&vg, &vh)?;
    Ok((value, value > thresholds.embed_min))
}

/// Runs all three metrics over one pair.
pub fn text_similarity_report(
    gold: &str,
    gen: &str,
    embedder: &dyn Embedder,
    thresholds: &SimilarityThresholds,
) -> Result<TextSimilarityReport, SimError> {
    let (edit_value, edit_similar) = normalized_edit_distance(gold, gen, thresholds)?;
    let (embed_value, embed_similar) = embedding_similarity(gold, gen, embedder, thresholds)?;
    let (fuzzy_value, fuzzy_similar) = fuzzy_ratio(gold, gen, thresholds)?;
    Ok(TextSimilarityReport {
        edit_value,
        edit_similar,
        embed_value,
        embed_similar,
        fuzzy_value,
        fuzzy_similar,
    })
}
