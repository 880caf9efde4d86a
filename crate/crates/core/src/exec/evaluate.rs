//! Running a gold/generated pair and classifying the outcome.

use serde::{Deserialize, Serialize};

use super::backend::{ExecBackend, ExecError};
use super::result::{compare_results, MatchMode, ResultTable};
use crate::analyzer::{has_order_by, parse_sql};

/// Why the pair fell short of an exact match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The gold query itself failed; nothing can be concluded.
    GoldError,
    /// The generated query failed to execute.
    GenError,
    /// Column or row counts differ.
    Shape,
    /// Shapes agree but some values differ.
    Values,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecComparison {
    pub gold_ok: bool,
    pub gen_ok: bool,
    pub exact_match: bool,
    pub lenient_match: bool,
    pub failure_reason: Option<FailureReason>,
}

/// Runs a statement, keeping query-level failures as values and letting
/// only infrastructure faults escape.
fn run(backend: &dyn ExecBackend, sql: &str) -> Result<Result<ResultTable, ExecError>, ExecError> {
    match backend.execute_readonly(sql) {
        Ok(table) => Ok(Ok(table)),
        Err(e) if e.is_backend_fault() => Err(e),
        Err(e) => Ok(Err(e)),
    }
}

/// Executes both queries on the fixture and compares their results in both
/// modes. The row-order rule comes from the gold query's own top-level
/// ORDER BY. Query-level failures (bad SQL, guard rejections, deadlines)
/// are classified in the comparison; only backend faults return an error.
pub fn evaluate_execution(
    gold_sql: &str,
    gen_sql: &str,
    backend: &dyn ExecBackend,
) -> Result<ExecComparison, ExecError> {
    let gold_result = run(backend, gold_sql)?;
    let gen_result = run(backend, gen_sql)?;
    let gold_ok = gold_result.is_ok();
    let gen_ok = gen_result.is_ok();

    let (Ok(gold), Ok(gen)) = (gold_result, gen_result) else {
        return Ok(ExecComparison {
            gold_ok,
            gen_ok,
            exact_match: false,
            lenient_match: false,
            failure_reason: Some(if gold_ok {
                FailureReason::GenError
            } else {
                FailureReason::GoldError
            }),
        });
    };

    let ordered = parse_sql(gold_sql)
        .map(|q| has_order_by(&q))
        .unwrap_or(false);
    let exact_match = compare_results(&gold, &gen, ordered, MatchMode::Exact);
    let lenient_match = compare_results(&gold, &gen, ordered, MatchMode::Lenient);
    let failure_reason = if exact_match {
        None
    } else if gold.column_names.len() != gen.column_names.len() || gold.rows.len() != gen.rows.len()
    {
        Some(FailureReason::Shape)
    } else {
        Some(FailureReason::Values)
    };
    Ok(ExecComparison {
        gold_ok,
        gen_ok,
        exact_match,
        lenient_match,
        failure_reason,
    })
}
