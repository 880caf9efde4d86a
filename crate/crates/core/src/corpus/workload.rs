//! Query workload loading.
//!
//! A workload file holds one JSON object per line with the fields `id`,
//! `domain`, `question`, and `gold_sql`. Gold SQL must parse in the
//! analyzer's SELECT subset so downstream stages never trip over a bad
//! reference query.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::parse_sql;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read workload file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("workload is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub id: String,
    pub domain: String,
    pub question: String,
    pub gold_sql: String,
}

/// Loads and validates a workload file. Blank lines are tolerated; every
/// other line must be a complete case with non-empty fields, a unique id,
/// and parseable gold SQL.
pub fn load_query_cases(path: &Path) -> Result<Vec<QueryCase>, WorkloadError> {
    let text = std::fs::read_to_string(path)?;
    parse_query_cases(&text)
}

/// Same as [`load_query_cases`] but over in-memory text.
pub fn parse_query_cases(text: &str) -> Result<Vec<QueryCase>, WorkloadError> {
    let mut cases: Vec<QueryCase> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let case: QueryCase = serde_json::from_str(trimmed).map_err(|e| WorkloadError::Format {
            line,
            reason: e.to_string(),
        })?;
        for (field, value) in [
            ("id", &case.id),
            ("domain", &case.domain),
            ("question", &case.question),
            ("gold_sql", &case.gold_sql),
        ] {
            if value.trim().is_empty() {
                return Err(WorkloadError::Format {
                    line,
                    reason: format!("field `{field}` is empty"),
                });
            }
        }
        if cases.iter().any(|c| c.id == case.id) {
            return Err(WorkloadError::Format {
                line,
                reason: format!("duplicate case id `{}`", case.id),
            });
        }
        if let Err(e) = parse_sql(&case.gold_sql) {
            return Err(WorkloadError::Format {
                line,
                reason: format!("gold_sql does not parse: {e}"),
            });
        }
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(WorkloadError::Empty);
    }
    Ok(cases)
}

/// Number of cases per domain, sorted by domain name.
pub fn domain_counts(cases: &[QueryCase]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for case in cases {
        *counts.entry(case.domain.clone()).or_insert(0) += 1;
    }
    counts
}
