//! Materialized query results and the two comparison modes.

use serde::{Deserialize, Serialize};

/// One cell. Numeric comparisons tolerate engine formatting noise within
/// 1e-9; booleans compare equal to the integers they store as; null equals
/// null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

const NUMERIC_TOLERANCE: f64 = 1e-9;

impl Value {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            Value::Bool(v) => Some(*v as i64 as f64),
            _ => None,
        }
    }

    /// Equality under the comparison rules, as opposed to `PartialEq`'s
    /// structural equality.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => (a - b).abs() <= NUMERIC_TOLERANCE,
                _ => false,
            },
        }
    }
}

/// A fully materialized result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<Value>>) -> ResultTable {
        for row in &rows {
            assert_eq!(
                row.len(),
                column_names.len(),
                "row arity must equal the column count"
            );
        }
        ResultTable { column_names, rows }
    }

    fn column(&self, index: usize) -> Vec<&Value> {
        self.rows.iter().map(|row| &row[index]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    Exact,
    Lenient,
}

fn rows_match(a: &[Vec<Value>], b: &[Vec<Value>], ordered: bool) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if ordered {
        a.iter()
            .zip(b)
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(u, v)| u.matches(v)))
    } else {
        multiset_match(a, b, |x, y| {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(u, v)| u.matches(v))
        })
    }
}

fn sequence_match(a: &[&Value], b: &[&Value], ordered: bool) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if ordered {
        a.iter().zip(b).all(|(x, y)| x.matches(y))
    } else {
        multiset_match(a, b, |x, y| x.matches(y))
    }
}

/// Multiset equality by greedy pairing; quadratic, which is fine at fixture
/// scale, and honors the tolerant cell equality that a sort key could not.
fn multiset_match<T>(a: &[T], b: &[T], eq: impl Fn(&T, &T) -> bool) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        b.iter().enumerate().any(|(i, y)| {
            if !used[i] && eq(x, y) {
                used[i] = true;
                true
            } else {
                false
            }
        })
    })
}

/// Compares two result tables. `gold_has_order_by` selects the row-order
/// rule: ordered sequences when the gold query sorts its output, multisets
/// otherwise.
///
/// Exact mode requires the same column count and matching rows. Lenient
/// mode requires each gold column's value sequence to appear among the
/// generated columns (same order rule) and tolerates extra generated
/// columns.
pub fn compare_results(
    gold: &ResultTable,
    gen: &ResultTable,
    gold_has_order_by: bool,
    mode: MatchMode,
) -> bool {
    match mode {
        MatchMode::Exact => {
            gold.column_names.len() == gen.column_names.len()
                && rows_match(&gold.rows, &gen.rows, gold_has_order_by)
        }
        MatchMode::Lenient => (0..gold.column_names.len()).all(|gold_idx| {
            let gold_column = gold.column(gold_idx);
            (0..gen.column_names.len()).any(|gen_idx| {
                sequence_match(&gold_column, &gen.column(gen_idx), gold_has_order_by)
            })
        }),
    }
}
