//! Per-query retrieval score statistics and their cross-query averages.
//!
//! All three statistics treat the retrieval scores as raw relevance values
//! in rank order:
//!
//! * `dcg`: sum of `score[i] / log2(i + 2)` for 0-based `i`, i.e. the
//!   classic position-discounted sum with the rank-1 item undiscounted.
//! * `std_dev`: population standard deviation (divide by the list length).
//! * `score_range`: max minus min.
//!
//! Scores here are distances (lower is better), so a *lower* DCG means the
//! retrieved set sat closer to the query.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("score list is empty")]
    EmptyScores,
    #[error("metrics list is empty")]
    EmptyList,
    #[error("score at position {0} is not finite")]
    NotFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub dcg: f64,
    pub std_dev: f64,
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRetrievalMetrics {
    pub avg_dcg: f64,
    pub avg_std_dev: f64,
    pub avg_range: f64,
    pub query_count: usize,
}

fn check_scores(scores: &[f64]) -> Result<(), MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyScores);
    }
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(MetricsError::NotFinite(i));
        }
    }
    Ok(())
}

/// Discounted cumulative gain over scores in rank order.
pub fn dcg(scores: &[f64]) -> Result<f64, MetricsError> {
    check_scores(scores)?;
    Ok(scores
        .iter()
        .enumerate()
        .map(|(i, s)| s / ((i + 2) as f64).log2())
        .sum())
}

/// Population standard deviation of the scores.
pub fn std_dev(scores: &[f64]) -> Result<f64, MetricsError> {
    check_scores(scores)?;
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let variance = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(variance.sqrt())
}

/// Max score minus min score.
pub fn score_range(scores: &[f64]) -> Result<f64, MetricsError> {
    check_scores(scores)?;
    let mut min = scores[0];
    let mut max = scores[0];
    for &s in &scores[1..] {
        min = min.min(s);
        max = max.max(s);
    }
    Ok(max - min)
}

/// All three statistics for one query's score list.
pub fn metrics_for(scores: &[f64]) -> Result<RetrievalMetrics, MetricsError> {
    Ok(RetrievalMetrics {
        dcg: dcg(scores)?,
        std_dev: std_dev(scores)?,
        range: score_range(scores)?,
    })
}

/// Arithmetic mean of each statistic across queries.
pub fn aggregate_metrics(
    per_query: &[RetrievalMetrics],
) -> Result<AggregateRetrievalMetrics, MetricsError> {
    if per_query.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let n = per_query.len() as f64;
    Ok(AggregateRetrievalMetrics {
        avg_dcg: per_query.iter().map(|m| m.dcg).sum::<f64>() / n,
        avg_std_dev: per_query.iter().map(|m| m.std_dev).sum::<f64>() / n,
        avg_range: per_query.iter().map(|m| m.range).sum::<f64>() / n,
        query_count: per_query.len(),
    })
}
