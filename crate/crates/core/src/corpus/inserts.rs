//! Deterministic synthetic `INSERT` statements for a table schema.
//!
//! Row values are drawn from a ChaCha stream seeded by the run seed, the
//! table name, and the row index. Because each row owns its stream, the
//! first `n` rows are identical no matter how many rows are requested, and
//! regenerating with the same seed reproduces the same statements byte for
//! byte.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::ddl::{SqlType, TableSchema};
use crate::util::fnv1a64;

#[derive(Debug, Error)]
pub enum InsertError {
    #[error("no value generator for column `{column}` of type `{type_spelling}`")]
    UnsupportedType {
        column: String,
        type_spelling: String,
    },
    #[error("insert count must be 1 or 2, got {0}")]
    InvalidCount(usize),
}

const WORDS: [&str; 8] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
];

fn row_rng(seed: u64, table: &str, row_index: usize) -> ChaCha8Rng {
    let mut key = Vec::new();
    key.extend_from_slice(&seed.to_le_bytes());
    key.extend_from_slice(table.to_ascii_lowercase().as_bytes());
    key.extend_from_slice(&(row_index as u64).to_le_bytes());
    ChaCha8Rng::seed_from_u64(fnv1a64(&key))
}

fn is_primary_key(schema: &TableSchema, column: &str) -> bool {
    schema
        .primary_key
        .iter()
        .any(|p| p.eq_ignore_ascii_case(column))
}

fn quote_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn render_value(
    schema: &TableSchema,
    column: &str,
    sql_type: &SqlType,
    row_index: usize,
    rng: &mut ChaCha8Rng,
) -> Result<String, InsertError> {
    let value = match sql_type {
        SqlType::Int => {
            // Primary keys count up from 1 so rows stay distinct; id-like
            // columns stay in a small range so synthetic joins can hit.
            if is_primary_key(schema, column) {
                (row_index as i64 + 1).to_string()
            } else if column.to_ascii_lowercase().ends_with("_id") {
                rng.gen_range(1..=5i64).to_string()
            } else {
                rng.gen_range(0..=999i64).to_string()
            }
        }
        SqlType::Real => {
            let cents = rng.gen_range(0..=99_999i64);
            format!("{:.2}", cents as f64 / 100.0)
        }
        SqlType::Text => {
            if is_primary_key(schema, column) {
                quote_str(&format!(
                    "{}_{}",
                    column.to_ascii_lowercase(),
                    row_index + 1
                ))
            } else {
                quote_str(WORDS[rng.gen_range(0..WORDS.len())])
            }
        }
        SqlType::Varchar(n) => {
            let base = if is_primary_key(schema, column) {
                format!("{}_{}", column.to_ascii_lowercase(), row_index + 1)
            } else {
                WORDS[rng.gen_range(0..WORDS.len())].to_string()
            };
            let clipped: String = base.chars().take(*n as usize).collect();
            quote_str(&clipped)
        }
        SqlType::Date => {
            let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid base date");
            let offset = rng.gen_range(0..=9_999u64);
            let date = base
                .checked_add_days(Days::new(offset))
                .expect("date offset in range");
            quote_str(&date.format("%Y-%m-%d").to_string())
        }
        SqlType::Bool => {
            if rng.gen_bool(0.5) {
                "1".to_string()
            } else {
                "0".to_string()
            }
        }
        SqlType::Other(raw) => {
            return Err(InsertError::UnsupportedType {
                column: column.to_string(),
                type_spelling: raw.clone(),
            })
        }
    };
    Ok(value)
}

/// Renders `rows` INSERT statements for `schema`. Unlike [`synth_inserts`]
/// the row count is unrestricted; database fixtures use this to load more
/// rows than a document ever embeds.
pub fn insert_statements(
    schema: &TableSchema,
    rows: usize,
    seed: u64,
) -> Result<Vec<String>, InsertError> {
    let mut out = Vec::with_capacity(rows);
    for row_index in 0..rows {
        let mut rng = row_rng(seed, &schema.name, row_index);
        let mut values = Vec::with_capacity(schema.columns.len());
        for col in &schema.columns {
            values.push(render_value(
                schema,
                &col.name,
                &col.sql_type,
                row_index,
                &mut rng,
            )?);
        }
        let columns: Vec<String> = schema
            .columns
            .iter()
            .map(|c| format!("\"{}\"", c.name))
            .collect();
        out.push(format!(
            "INSERT INTO \"{}\" ({}) VALUES ({});",
            schema.name,
            columns.join(", "),
            values.join(", ")
        ));
    }
    Ok(out)
}

/// Renders the one or two INSERT statements embedded in sample-bearing
/// document variants.
pub fn synth_inserts(
    schema: &TableSchema,
    count: usize,
    seed: u64,
) -> Result<Vec<String>, InsertError> {
    if !(1..=2).contains(&count) {
        return Err(InsertError::InvalidCount(count));
    }
    insert_statements(schema, count, seed)
}
