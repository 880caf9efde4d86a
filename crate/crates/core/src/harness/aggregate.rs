//! Per-variant rollups of case outcomes.
//!
//! Every percentage uses the full case count as its denominator, so a case
//! that failed before a metric could be computed counts against that
//! metric. The one exception is average prompt size, which only averages
//! the prompts that were actually built; mixing in zeros for failed cases
//! would distort size comparisons across variants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::case::{CaseOutcome, Stage};
use crate::corpus::DocVariant;
use crate::retrieval::{aggregate_metrics, AggregateRetrievalMetrics, MetricsError};

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("cannot aggregate an empty outcome list")]
    EmptyList,
    #[error("outcome list mixes variants {0} and {1}")]
    MixedVariants(DocVariant, DocVariant),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One variant's row in the experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: DocVariant,
    pub case_count: usize,
    /// None when no case in the variant got through retrieval.
    pub avg_retrieval: Option<AggregateRetrievalMetrics>,
    pub avg_prompt_chars: f64,
    pub pct_similar_edit: f64,
    pub pct_similar_embed: f64,
    pub pct_similar_fuzzy: f64,
    pub pct_mismatch_table: f64,
    pub pct_mismatch_column: f64,
    pub pct_mismatch_operation: f64,
    pub pct_exec_exact: f64,
    pub pct_exec_lenient: f64,
    pub gen_failure_count: usize,
    pub parse_failure_count: usize,
}

fn pct(hits: usize, total: usize) -> f64 {
    100.0 * hits as f64 / total as f64
}

pub fn aggregate_variant(outcomes: &[CaseOutcome]) -> Result<VariantReport, AggregateError> {
    let first = outcomes.first().ok_or(AggregateError::EmptyList)?;
    let variant = first.variant;
    if let Some(other) = outcomes.iter().find(|o| o.variant != variant) {
        return Err(AggregateError::MixedVariants(variant, other.variant));
    }
    let total = outcomes.len();

    let per_query: Vec<_> = outcomes
        .iter()
        .filter_map(|o| o.retrieval.as_ref().map(|r| r.metrics))
        .collect();
    let avg_retrieval = if per_query.is_empty() {
        None
    } else {
        Some(aggregate_metrics(&per_query)?)
    };

    let sizes: Vec<usize> = outcomes
        .iter()
        .filter_map(|o| o.prompt_size.map(|p| p.chars))
        .collect();
    let avg_prompt_chars = if sizes.is_empty() {
        0.0
    } else {
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
    };

    let sim = |pick: fn(&crate::textsim::TextSimilarityReport) -> bool| {
        pct(
            outcomes
                .iter()
                .filter(|o| o.text_sim.as_ref().is_some_and(pick))
                .count(),
            total,
        )
    };
    let mismatch = |pick: fn(&crate::analyzer::ComponentMatchReport) -> bool| {
        let matching = outcomes
            .iter()
            .filter(|o| o.components.as_ref().is_some_and(pick))
            .count();
        pct(total - matching, total)
    };
    let exec = |pick: fn(&crate::exec::ExecComparison) -> bool| {
        pct(
            outcomes
                .iter()
                .filter(|o| o.execution.as_ref().is_some_and(pick))
                .count(),
            total,
        )
    };

    Ok(VariantReport {
        variant,
        case_count: total,
        avg_retrieval,
        avg_prompt_chars,
        pct_similar_edit: sim(|s| s.edit_similar),
        pct_similar_embed: sim(|s| s.embed_similar),
        pct_similar_fuzzy: sim(|s| s.fuzzy_similar),
        pct_mismatch_table: mismatch(|c| c.table_match),
        pct_mismatch_column: mismatch(|c| c.column_match),
        pct_mismatch_operation: mismatch(|c| c.operation_match),
        pct_exec_exact: exec(|e| e.exact_match),
        pct_exec_lenient: exec(|e| e.lenient_match),
        gen_failure_count: outcomes
            .iter()
            .filter(|o| o.errors.iter().any(|e| e.stage == Stage::Generation))
            .count(),
        parse_failure_count: outcomes
            .iter()
            .filter(|o| o.components.as_ref().is_some_and(|c| c.parse_error))
            .count(),
    })
}
