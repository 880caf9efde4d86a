//! Query execution against a fixture database and result comparison.
//!
//! Gold and generated SQL run on the same fixture under a read-only guard;
//! their result tables are compared two ways. Exact matching demands the
//! same column count and the same rows, ordered when the gold query orders
//! its output and as a multiset otherwise. Lenient matching asks only that
//! every gold column's values appear in some generated column, tolerating
//! redundant extra columns.

pub mod backend;
pub mod evaluate;
pub mod result;

pub use backend::{
    build_backend, BackendKind, DbBackendSpec, EmbeddedBackend, ExecBackend, ExecError,
    ServerBackend,
};
pub use evaluate::{evaluate_execution, ExecComparison, FailureReason};
pub use result::{compare_results, MatchMode, ResultTable, Value};
