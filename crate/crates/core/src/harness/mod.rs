//! Experiment orchestration: configuration, per-case evaluation, variant
//! aggregation, and report emission.
//!
//! A run walks the requested document variants. For each one it renders the
//! corpus, indexes it, and pushes every workload case through the pipeline:
//! retrieve, build the prompt, generate SQL, then score the generation
//! against the gold query with text similarity, component matching, and
//! execution comparison. Outcomes stream to a line-delimited run log and
//! fold into one report per variant.

pub mod aggregate;
pub mod case;
pub mod config;
pub mod report;
pub mod run;

pub use aggregate::{aggregate_variant, AggregateError, VariantReport};
pub use case::{
    evaluate_case, CaseDeps, CaseOutcome, PromptSize, RetrievalOutcome, Stage, StageError,
};
pub use config::{
    apply_env_overrides, load_config, parse_variant_selector, ConfigError, EnvSecrets,
    GeneratorKind, GeneratorSpec, RunConfig, ENV_EMBED_AUTH, ENV_EMBED_ENDPOINT, ENV_GEN_AUTH,
    ENV_GEN_ENDPOINT,
};
pub use report::{emit_reports, ExperimentReport, ReportError, ReportFormats, RunMeta};
pub use run::{
    build_generator_client, load_descriptions, load_schemas, run_experiment, RunError, RunOptions,
};
