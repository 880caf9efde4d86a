//! Prompt assembly and SQL generation.
//!
//! The prompt places the question, a fixed instruction block, and the
//! retrieved schema documents into a chat-style completion template. The
//! completion client is pluggable: an HTTP endpoint for real models, or
//! offline stubs that answer from the workload's gold SQL. Responses are
//! cached on disk keyed by prompt hash and generation settings.

pub mod generate;
pub mod stub;
pub mod template;

pub use generate::{
    extract_sql, ClientKind, CompletionClient, GenConfig, GenError, Generation, GenerationCache,
    GenerationRecord, HttpCompletionClient,
};
pub use stub::{CorruptAddIdClient, EchoGoldClient, FixedMapClient};
pub use template::{build_prompt, PromptError, PromptRecord, PromptTemplate};
