//! Full experiment orchestration.
//!
//! A run loads every domain DDL file in the corpus directory, the query
//! workload, and optional description overrides, builds one shared
//! execution fixture, then walks the requested variants: render corpus,
//! build index, evaluate every case, aggregate. Outcomes append to
//! `run.jsonl` as they complete so a crashed run loses at most one chunk,
//! and `--resume` replays logged outcomes whose prompt hashes still match
//! instead of regenerating them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::aggregate::{aggregate_variant, AggregateError};
use super::case::{evaluate_case, CaseDeps, CaseOutcome};
use super::config::{ConfigError, EnvSecrets, GeneratorKind, RunConfig};
use super::report::{ExperimentReport, RunMeta};
use crate::corpus::{
    build_corpus, insert_statements, load_query_cases, normalize_ddl, parse_ddl, CorpusError,
    DdlError, DocVariant, InsertError, QueryCase, TableSchema, WorkloadError,
};
use crate::exec::{build_backend, BackendKind, EmbeddedBackend, ExecBackend, ExecError};
use crate::prompt::{
    CompletionClient, CorruptAddIdClient, EchoGoldClient, FixedMapClient, GenError,
    GenerationCache, HttpCompletionClient,
};
use crate::retrieval::{build_embedder, build_index, DistanceMetric, EmbedError, IndexError};
use crate::util::parallel_map;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("input: {0}")]
    Input(String),
    #[error("run io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ddl(#[from] DdlError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Insert(#[from] InsertError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("run log json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Reuse outcomes already in the run log when their prompt hashes
    /// still match; only changed or missing cases are re-evaluated.
    pub resume: bool,
}

/// Parses every `*.sql` file in the corpus directory, in file-name order.
pub fn load_schemas(corpus_dir: &Path) -> Result<Vec<TableSchema>, RunError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|path| path.extension().is_some_and(|ext| ext == "sql"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(RunError::Input(format!(
            "no .sql domain files in {}",
            corpus_dir.display()
        )));
    }
    let mut schemas = Vec::new();
    let mut seen = BTreeSet::new();
    for file in &files {
        let text = std::fs::read_to_string(file)?;
        for schema in parse_ddl(&text)? {
            if !seen.insert(schema.name.to_lowercase()) {
                return Err(RunError::Input(format!(
                    "table `{}` defined in more than one domain file",
                    schema.name
                )));
            }
            schemas.push(schema);
        }
    }
    Ok(schemas)
}

/// Optional `descriptions.toml`: a flat table of table-name -> description
/// used in place of the generated description for V5..V7 documents.
pub fn load_descriptions(corpus_dir: &Path) -> Result<BTreeMap<String, String>, RunError> {
    let path = corpus_dir.join("descriptions.toml");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(&path)?;
    toml::from_str(&text).map_err(|e| RunError::Input(format!("descriptions.toml: {e}")))
}

/// Builds the execution backend. An embedded backend with an empty
/// connection string gets a synthetic fixture at `out_dir/fixture.db`,
/// regenerated from the schemas each run so its contents depend only on
/// the seed. A server backend is assumed to be already populated.
fn prepare_backend(
    config: &RunConfig,
    schemas: &[TableSchema],
) -> Result<Box<dyn ExecBackend>, RunError> {
    match config.backend.kind {
        BackendKind::Embedded => {
            let path = if config.backend.connection.is_empty() {
                config.out_dir.join("fixture.db")
            } else {
                PathBuf::from(&config.backend.connection)
            };
            let backend = EmbeddedBackend::create(&path, config.backend.statement_timeout_ms)?;
            let mut ddl = String::new();
            let mut inserts = Vec::new();
            for schema in schemas {
                ddl.push_str(&normalize_ddl(schema));
                ddl.push('\n');
                inserts.extend(insert_statements(schema, config.fixture_rows, config.seed)?);
            }
            backend.load_fixture(&ddl, &inserts)?;
            Ok(Box::new(backend))
        }
        BackendKind::Server => Ok(build_backend(&config.backend)?),
    }
}

/// Builds the completion client described by the config. Stub kinds close
/// over the workload (and schemas) so they can answer per-case.
pub fn build_generator_client(
    config: &RunConfig,
    secrets: &EnvSecrets,
    cases: &[QueryCase],
    schemas: &[TableSchema],
) -> Result<Box<dyn CompletionClient>, RunError> {
    match config.generator.kind {
        GeneratorKind::Http => {
            let endpoint = config
                .generator
                .endpoint
                .as_deref()
                .expect("validate() requires an endpoint for http");
            Ok(Box::new(HttpCompletionClient::new(
                endpoint,
                secrets.gen_auth.clone(),
                config.generator.timeout_ms,
            )?))
        }
        GeneratorKind::EchoGold => Ok(Box::new(EchoGoldClient::new(cases))),
        GeneratorKind::FixedMap => {
            let raw = config
                .generator
                .fixed_map_file
                .as_ref()
                .expect("validate() requires fixed_map_file for fixed-map");
            let path = if raw.is_absolute() {
                raw.clone()
            } else {
                config.corpus_dir.join(raw)
            };
            let text = std::fs::read_to_string(&path)?;
            let map: BTreeMap<String, String> = serde_json::from_str(&text)?;
            Ok(Box::new(FixedMapClient::new(map)))
        }
        GeneratorKind::CorruptAddIdColumn => Ok(Box::new(CorruptAddIdClient::new(cases, schemas))),
    }
}

/// Loads prior outcomes keyed by (variant, query id). Unparseable lines
/// are skipped: a run that died mid-write leaves a truncated last line,
/// and resuming past it is the whole point.
fn load_run_log(path: &Path) -> Result<HashMap<(DocVariant, String), CaseOutcome>, RunError> {
    let mut map = HashMap::new();
    if !path.exists() {
        return Ok(map);
    }
    let text = std::fs::read_to_string(path)?;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(outcome) = serde_json::from_str::<CaseOutcome>(line) {
            map.insert((outcome.variant, outcome.query_id.clone()), outcome);
        }
    }
    Ok(map)
}

pub fn run_experiment(
    config: &RunConfig,
    secrets: &EnvSecrets,
    options: &RunOptions,
) -> Result<ExperimentReport, RunError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;

    let schemas = load_schemas(&config.corpus_dir)?;
    let descriptions = load_descriptions(&config.corpus_dir)?;
    let cases = load_query_cases(&config.query_path())?;

    let backend = prepare_backend(config, &schemas)?;
    let client = build_generator_client(config, secrets, &cases, &schemas)?;
    let cache = GenerationCache::new(Some(&config.out_dir.join("gen_cache")))?;

    let log_path = config.out_dir.join("run.jsonl");
    let logged = if options.resume {
        load_run_log(&log_path)?
    } else {
        HashMap::new()
    };
    let log_file = if options.resume {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)?
    } else {
        std::fs::File::create(&log_path)?
    };
    let mut log = BufWriter::new(log_file);

    let mut variants = config.variants.clone();
    variants.sort();
    variants.dedup();

    let mut variant_reports = Vec::with_capacity(variants.len());
    let mut total_cases = 0usize;

    for &variant in &variants {
        let corpus = build_corpus(&schemas, variant, config.seed, &descriptions)?;
        let embedder = build_embedder(
            &config.embedder,
            secrets.embed_auth.clone(),
            config.concurrency,
            Some(config.out_dir.join("embed_cache")),
        )?;
        let index = build_index(&corpus, &embedder, DistanceMetric::default())?;
        let deps = CaseDeps {
            corpus: &corpus,
            index: &index,
            embedder: &embedder,
            template: &config.template,
            gen_config: &config.gen_config,
            thresholds: &config.thresholds,
            cache: &cache,
            client: client.as_ref(),
            k: config.k,
            backend: Some(backend.as_ref()),
        };

        let mut outcomes: Vec<CaseOutcome> = Vec::with_capacity(cases.len());
        for chunk in cases.chunks(config.concurrency.max(1) * 4) {
            let produced = parallel_map(chunk, config.concurrency, |_, case| {
                let prior = logged.get(&(variant, case.id.clone()));
                evaluate_case(case, &deps, prior)
            });
            for outcome in &produced {
                let replayed = logged
                    .get(&(variant, outcome.query_id.clone()))
                    .is_some_and(|prior| prior == outcome);
                if !replayed {
                    serde_json::to_writer(&mut log, outcome)?;
                    log.write_all(b"\n")?;
                }
            }
            log.flush()?;
            outcomes.extend(produced);
        }

        total_cases += outcomes.len();
        variant_reports.push(aggregate_variant(&outcomes)?);
    }

    let (cache_hits, cache_misses) = cache.stats();
    Ok(ExperimentReport {
        config: config.clone(),
        variants: variant_reports,
        meta: RunMeta {
            total_cases,
            cache_hits,
            cache_misses,
        },
    })
}
