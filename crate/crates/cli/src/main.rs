//! `ragsql` command-line driver.
//!
//! Subcommands mirror the experiment lifecycle: `corpus render` writes the
//! per-variant schema documents, `index build` persists retrieval indexes,
//! `ask` pushes one ad-hoc question through retrieval and generation,
//! `eval run` executes the full evaluation and writes reports, and
//! `report emit` re-derives report files from an existing run log.
//!
//! Endpoint URLs and auth tokens may come from the environment
//! (`RAGSQL_EMBED_ENDPOINT`, `RAGSQL_EMBED_AUTH`, `RAGSQL_GEN_ENDPOINT`,
//! `RAGSQL_GEN_AUTH`); tokens are never read from or written to files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ragsql_core::corpus::{build_corpus, load_query_cases, write_corpus, DocVariant};
use ragsql_core::harness::{
    aggregate_variant, apply_env_overrides, build_generator_client, emit_reports, load_config,
    load_descriptions, load_schemas, parse_variant_selector, run_experiment, CaseOutcome,
    EnvSecrets, ExperimentReport, ReportFormats, RunConfig, RunMeta, RunOptions, VariantReport,
};
use ragsql_core::prompt::build_prompt;
use ragsql_core::prompt::GenerationCache;
use ragsql_core::retrieval::{build_embedder, build_index, metrics_for, DistanceMetric};

#[derive(Parser)]
#[command(
    name = "ragsql",
    version,
    about = "Evaluation harness for schema-document retrieval and text-to-SQL generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Work with the schema-document corpus.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Build retrieval indexes.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Answer a single ad-hoc question: retrieval, prompt, generation.
    Ask(AskArgs),
    /// Run evaluations.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Emit report files.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Render every table's document for the selected variants.
    Render(CommonArgs),
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Embed the corpus and persist one index file per variant.
    Build(CommonArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Evaluate every workload case across the selected variants.
    Run(EvalRunArgs),
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Rebuild report files from the run log in the output directory.
    Emit(ReportEmitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Variant selection such as `V2`, `V1..V7`, or `V2,V5` (overrides the
    /// config file).
    #[arg(long)]
    variants: Option<String>,
    /// Output directory (overrides the config file).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AskArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Natural-language question to answer.
    #[arg(long)]
    question: String,
    /// Number of documents to retrieve (overrides the config file).
    #[arg(long)]
    k: Option<usize>,
    /// Print the fully assembled prompt.
    #[arg(long)]
    show_prompt: bool,
}

#[derive(Args)]
struct EvalRunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Skip cases already present in the run log with matching prompt
    /// hashes.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ReportEmitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated output formats: `json`, `csv`.
    #[arg(long, default_value = "json,csv")]
    format: String,
}

fn load(common: &CommonArgs) -> anyhow::Result<(RunConfig, EnvSecrets)> {
    let mut config = load_config(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    let secrets = apply_env_overrides(&mut config);
    if let Some(selector) = &common.variants {
        config.variants = parse_variant_selector(selector)?;
    }
    if let Some(out_dir) = &common.out_dir {
        config.out_dir = out_dir.clone();
    }
    config.validate()?;
    Ok((config, secrets))
}

fn parse_formats(spec: &str) -> anyhow::Result<ReportFormats> {
    let mut formats = ReportFormats {
        json: false,
        csv: false,
    };
    for part in spec.split(',') {
        match part.trim().to_ascii_lowercase().as_str() {
            "json" => formats.json = true,
            "csv" => formats.csv = true,
            other => bail!("unknown report format `{other}` (expected json or csv)"),
        }
    }
    if !formats.json && !formats.csv {
        bail!("no report format selected");
    }
    Ok(formats)
}

fn corpus_render(args: &CommonArgs) -> anyhow::Result<()> {
    let (config, _secrets) = load(args)?;
    let schemas = load_schemas(&config.corpus_dir)?;
    let descriptions = load_descriptions(&config.corpus_dir)?;
    for &variant in &config.variants {
        let corpus = build_corpus(&schemas, variant, config.seed, &descriptions)?;
        let dir = config.out_dir.join("corpus");
        let paths = write_corpus(&corpus, &dir)?;
        println!(
            "{variant}: wrote {} documents to {}",
            paths.len(),
            dir.display()
        );
    }
    Ok(())
}

fn index_build(args: &CommonArgs) -> anyhow::Result<()> {
    let (config, secrets) = load(args)?;
    let schemas = load_schemas(&config.corpus_dir)?;
    let descriptions = load_descriptions(&config.corpus_dir)?;
    let embedder = build_embedder(
        &config.embedder,
        secrets.embed_auth.clone(),
        config.concurrency,
        Some(config.out_dir.join("embed_cache")),
    )?;
    for &variant in &config.variants {
        let corpus = build_corpus(&schemas, variant, config.seed, &descriptions)?;
        let index = build_index(&corpus, &embedder, DistanceMetric::default())?;
        let path = config.out_dir.join(format!("index_{variant}.json"));
        index.save(&path)?;
        println!(
            "{variant}: indexed {} documents -> {}",
            corpus.documents.len(),
            path.display()
        );
    }
    Ok(())
}

fn ask(args: &AskArgs) -> anyhow::Result<()> {
    let (mut config, secrets) = load(&args.common)?;
    if let Some(k) = args.k {
        config.k = k;
    }
    let variant = *config
        .variants
        .first()
        .expect("validate() rejects empty variant lists");
    let schemas = load_schemas(&config.corpus_dir)?;
    let descriptions = load_descriptions(&config.corpus_dir)?;
    let corpus = build_corpus(&schemas, variant, config.seed, &descriptions)?;
    let embedder = build_embedder(
        &config.embedder,
        secrets.embed_auth.clone(),
        config.concurrency,
        Some(config.out_dir.join("embed_cache")),
    )?;
    let index = build_index(&corpus, &embedder, DistanceMetric::default())?;

    let result = index.retrieve(&embedder, "ask", &args.question, config.k)?;
    println!("question: {}", args.question);
    println!("variant:  {variant}");
    println!("rank  score        table");
    for item in &result.items {
        println!("{:<5} {:<12.6} {}", item.rank, item.score, item.table_name);
    }
    let metrics = metrics_for(&result.scores())?;
    println!(
        "scores: dcg {:.6}  std_dev {:.6}  range {:.6}",
        metrics.dcg, metrics.std_dev, metrics.range
    );

    let docs: Vec<_> = result
        .items
        .iter()
        .filter_map(|item| corpus.document(&item.table_name))
        .collect();
    let prompt = build_prompt(&args.question, &docs, &config.template)?;
    println!(
        "prompt: {} chars, ~{} tokens",
        prompt.char_len, prompt.est_tokens
    );
    if args.show_prompt {
        println!("--- prompt ---\n{}\n--- end prompt ---", prompt.prompt_text);
    }

    let cases = load_query_cases(&config.query_path()).unwrap_or_default();
    let client = build_generator_client(&config, &secrets, &cases, &schemas)?;
    let cache = GenerationCache::new(Some(&config.out_dir.join("gen_cache")))?;
    match cache.generate(&prompt, &config.gen_config, client.as_ref()) {
        Ok(generation) => {
            println!(
                "generated SQL ({}, {}ms{}):",
                generation.record.client_kind,
                generation.record.latency_ms,
                if generation.from_cache {
                    ", cached"
                } else {
                    ""
                }
            );
            println!("{}", generation.record.extracted_sql);
        }
        Err(e) => println!("generation unavailable: {e}"),
    }
    Ok(())
}

fn print_summary(variants: &[VariantReport]) {
    println!(
        "{:<8} {:>6} {:>9} {:>11} {:>11} {:>12} {:>11} {:>11}",
        "variant",
        "cases",
        "avg_dcg",
        "sim_edit%",
        "col_miss%",
        "op_miss%",
        "exec_ex%",
        "exec_len%"
    );
    for row in variants {
        let dcg = row
            .avg_retrieval
            .as_ref()
            .map(|m| format!("{:.4}", m.avg_dcg))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:>6} {:>9} {:>11.1} {:>11.1} {:>12.1} {:>11.1} {:>11.1}",
            row.variant.to_string(),
            row.case_count,
            dcg,
            row.pct_similar_edit,
            row.pct_mismatch_column,
            row.pct_mismatch_operation,
            row.pct_exec_exact,
            row.pct_exec_lenient,
        );
    }
}

fn eval_run(args: &EvalRunArgs) -> anyhow::Result<()> {
    let (config, secrets) = load(&args.common)?;
    let report = run_experiment(
        &config,
        &secrets,
        &RunOptions {
            resume: args.resume,
        },
    )?;
    let written = emit_reports(&report, &config.out_dir, ReportFormats::default())?;
    print_summary(&report.variants);
    println!(
        "cache: {} hits, {} misses",
        report.meta.cache_hits, report.meta.cache_misses
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn report_emit(args: &ReportEmitArgs) -> anyhow::Result<()> {
    let (config, _secrets) = load(&args.common)?;
    let formats = parse_formats(&args.format)?;
    let log_path = config.out_dir.join("run.jsonl");
    let text = std::fs::read_to_string(&log_path)
        .with_context(|| format!("reading run log {}", log_path.display()))?;

    // Keep the last outcome per (variant, case): a resumed run may have
    // logged an early attempt and then a corrected one.
    let mut latest: BTreeMap<(DocVariant, String), CaseOutcome> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let outcome: CaseOutcome = serde_json::from_str(line)
            .with_context(|| format!("parsing run log {}", log_path.display()))?;
        latest.insert((outcome.variant, outcome.query_id.clone()), outcome);
    }
    let mut by_variant: BTreeMap<DocVariant, Vec<CaseOutcome>> = BTreeMap::new();
    for ((variant, _), outcome) in latest {
        by_variant.entry(variant).or_default().push(outcome);
    }
    let mut variants = Vec::with_capacity(by_variant.len());
    let mut total_cases = 0;
    for outcomes in by_variant.values() {
        total_cases += outcomes.len();
        variants.push(aggregate_variant(outcomes)?);
    }
    let report = ExperimentReport {
        config: config.clone(),
        variants,
        meta: RunMeta {
            total_cases,
            cache_hits: 0,
            cache_misses: 0,
        },
    };
    let written = emit_reports(&report, &config.out_dir, formats)?;
    print_summary(&report.variants);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Corpus {
            command: CorpusCommand::Render(args),
        } => corpus_render(&args),
        Command::Index {
            command: IndexCommand::Build(args),
        } => index_build(&args),
        Command::Ask(args) => ask(&args),
        Command::Eval {
            command: EvalCommand::Run(args),
        } => eval_run(&args),
        Command::Report {
            command: ReportCommand::Emit(args),
        } => report_emit(&args),
    }
}
