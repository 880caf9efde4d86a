//! Schema corpus construction.
//!
//! A corpus starts from `CREATE TABLE` statements, one file per domain. Each
//! table is rendered into one of seven document variants that differ in how
//! much material accompanies the schema: the verbatim DDL, a canonicalized
//! DDL, synthetic `INSERT` statements, and a generated (or hand-written)
//! natural-language description.

pub mod ddl;
pub mod describe;
pub mod document;
pub mod inserts;
pub mod workload;

pub use ddl::{normalize_ddl, parse_ddl, ColumnDef, DdlError, ForeignKeyRef, SqlType, TableSchema};
pub use describe::describe_table;
pub use document::{
    build_corpus, render_document, write_corpus, Corpus, CorpusError, DocVariant, Document,
};
pub use inserts::{insert_statements, synth_inserts, InsertError};
pub use workload::{domain_counts, load_query_cases, parse_query_cases, QueryCase, WorkloadError};
