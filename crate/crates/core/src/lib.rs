//! Evaluation harness for retrieval-augmented text-to-SQL experiments.
//!
//! The library is organized as a pipeline:
//!
//! * [`corpus`] parses `CREATE TABLE` statements and renders seven
//!   schema-document variants per table (raw DDL, normalized DDL, and
//!   combinations of synthetic `INSERT` rows and natural-language
//!   descriptions).
//! * [`retrieval`] embeds documents, serves top-k nearest-neighbour lookups
//!   from a flat index, and computes per-query score statistics (DCG,
//!   standard deviation, range).
//! * [`prompt`] assembles the generation prompt from a question plus the
//!   retrieved documents and talks to a completion endpoint (or a test stub),
//!   with disk caching keyed by prompt hash.
//! * [`textsim`] scores generated SQL against gold SQL as plain text
//!   (normalized edit distance, embedding cosine, token-sort fuzzy ratio).
//! * [`analyzer`] parses a practical SELECT subset and compares structural
//!   profiles (tables, columns, operations) between gold and generated SQL.
//! * [`exec`] runs both queries against a synthesized database fixture and
//!   compares result tables exactly and leniently.
//! * [`harness`] wires everything into per-case evaluation, per-variant
//!   aggregation, and report emission.

pub mod analyzer;
pub mod corpus;
pub mod exec;
pub mod harness;
pub mod prompt;
pub mod retrieval;
pub mod textsim;
pub mod util;
