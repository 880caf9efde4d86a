//! Experiment report assembly and file emission.
//!
//! `report.json` holds everything: the config snapshot, one row per
//! variant, and run metadata. The four CSVs are plot-ready projections of
//! the variant rows, one per figure family (retrieval score shape, text
//! similarity, component mismatch, execution match). Emission is
//! deterministic: fixed column order, rows sorted V1..V7, and no
//! wall-clock metadata, so reruns with a warm cache are byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::aggregate::VariantReport;
use super::config::RunConfig;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Run-level counters. Deliberately free of timestamps and host details:
/// anything non-deterministic here would break replay comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub total_cases: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub variants: Vec<VariantReport>,
    pub meta: RunMeta,
}

/// Which files `emit_reports` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportFormats {
    pub json: bool,
    pub csv: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats {
            json: true,
            csv: true,
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn num(value: f64) -> String {
    format!("{value:.6}")
}

/// Writes `report.json` plus the four per-figure CSVs into `out_dir`,
/// returning the paths written. Rows are emitted in variant order
/// regardless of the order inside the report.
pub fn emit_reports(
    report: &ExperimentReport,
    out_dir: &Path,
    formats: ReportFormats,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    if formats.json {
        let path = out_dir.join("report.json");
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        written.push(path);
    }

    if formats.csv {
        let mut rows: Vec<&VariantReport> = report.variants.iter().collect();
        rows.sort_by_key(|r| r.variant);

        let path = out_dir.join("retrieval_metrics.csv");
        write_csv(
            &path,
            &["variant", "avg_dcg", "avg_std_dev", "avg_range"],
            &rows
                .iter()
                .map(|r| match &r.avg_retrieval {
                    Some(m) => vec![
                        r.variant.to_string(),
                        num(m.avg_dcg),
                        num(m.avg_std_dev),
                        num(m.avg_range),
                    ],
                    None => vec![
                        r.variant.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ],
                })
                .collect::<Vec<_>>(),
        )?;
        written.push(path);

        let path = out_dir.join("similarity.csv");
        write_csv(
            &path,
            &[
                "variant",
                "pct_similar_edit",
                "pct_similar_embed",
                "pct_similar_fuzzy",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.variant.to_string(),
                        num(r.pct_similar_edit),
                        num(r.pct_similar_embed),
                        num(r.pct_similar_fuzzy),
                    ]
                })
                .collect::<Vec<_>>(),
        )?;
        written.push(path);

        let path = out_dir.join("components.csv");
        write_csv(
            &path,
            &[
                "variant",
                "pct_mismatch_table",
                "pct_mismatch_column",
                "pct_mismatch_operation",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.variant.to_string(),
                        num(r.pct_mismatch_table),
                        num(r.pct_mismatch_column),
                        num(r.pct_mismatch_operation),
                    ]
                })
                .collect::<Vec<_>>(),
        )?;
        written.push(path);

        let path = out_dir.join("execution.csv");
        write_csv(
            &path,
            &["variant", "pct_exec_exact", "pct_exec_lenient"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.variant.to_string(),
                        num(r.pct_exec_exact),
                        num(r.pct_exec_lenient),
                    ]
                })
                .collect::<Vec<_>>(),
        )?;
        written.push(path);
    }

    Ok(written)
}
