//! Structural analysis of a practical SELECT subset.
//!
//! The parser covers the query shapes that text-to-SQL benchmarks exercise:
//! joins, nested subqueries, set operations, aggregation, grouping, ordering,
//! and the usual predicate forms. From the parse tree, [`extract_profile`]
//! derives a structural profile (tables, columns, operations) that can be
//! compared between a gold query and a generated one without executing
//! either.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod profile;

pub use ast::{
    BinaryOp, Expr, FromClause, Join, JoinKind, Limit, Literal, OrderKey, Query, Select,
    SelectItem, SetOp, TableRef, UnaryOp,
};
pub use lexer::{tokenize, SqlTok, Token};
pub use parser::{parse_sql, SqlParseError};
pub use profile::{
    canonicalize_sql, compare_profiles, extract_profile, has_order_by, profile_sql,
    ComponentMatchReport, SqlComponentProfile, SqlOperation,
};
