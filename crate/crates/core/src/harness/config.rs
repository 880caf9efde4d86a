//! Run configuration: file format, defaults, and environment overrides.
//!
//! Configuration lives in a TOML file whose sections mirror [`RunConfig`].
//! Endpoint URLs may be overridden by environment variables, and auth
//! tokens are *only* readable from the environment so they can never end up
//! inside a serialized config snapshot or report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocVariant;
use crate::exec::DbBackendSpec;
use crate::prompt::{GenConfig, PromptTemplate};
use crate::retrieval::EmbedderSpec;
use crate::textsim::SimilarityThresholds;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid variant selector `{0}`")]
    BadVariantSelector(String),
}

/// How generated SQL is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// POST the prompt to a completion endpoint.
    Http,
    /// Answer every case with its gold SQL (positive control).
    EchoGold,
    /// Answer from a question-to-SQL map loaded from a JSON file.
    FixedMap,
    /// Answer with gold SQL plus a redundant ID column (negative control).
    CorruptAddIdColumn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Completion endpoint URL; required for the http kind.
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    /// JSON file of {"question": "sql"} entries for the fixed-map kind.
    pub fixed_map_file: Option<PathBuf>,
}

impl Default for GeneratorSpec {
    fn default() -> GeneratorSpec {
        GeneratorSpec {
            kind: GeneratorKind::EchoGold,
            endpoint: None,
            timeout_ms: 120_000,
            fixed_map_file: None,
        }
    }
}

/// Everything a run needs. The file layout mirrors this struct: top-level
/// keys plus `[embedder]`, `[generator]`, `[gen_config]`, `[thresholds]`,
/// `[backend]`, and optional `[template]` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Directory holding one DDL file per domain, the query-case file, and
    /// optionally `descriptions.toml` with per-table description overrides.
    pub corpus_dir: PathBuf,
    /// Query-case file (JSON lines); relative paths resolve against
    /// `corpus_dir`.
    pub query_file: PathBuf,
    pub variants: Vec<DocVariant>,
    pub k: usize,
    /// Seed for synthetic insert values (documents and fixture rows).
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Upper bound on parallel case evaluations and endpoint calls.
    pub concurrency: usize,
    /// Rows per table in the execution fixture.
    pub fixture_rows: usize,
    pub embedder: EmbedderSpec,
    pub generator: GeneratorSpec,
    pub gen_config: GenConfig,
    pub thresholds: SimilarityThresholds,
    pub backend: DbBackendSpec,
    pub template: PromptTemplate,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            corpus_dir: PathBuf::new(),
            query_file: PathBuf::from("queries.jsonl"),
            variants: DocVariant::ALL.to_vec(),
            k: 3,
            seed: 42,
            out_dir: PathBuf::from("out"),
            concurrency: 8,
            fixture_rows: 3,
            embedder: EmbedderSpec::default(),
            generator: GeneratorSpec::default(),
            gen_config: GenConfig::default(),
            thresholds: SimilarityThresholds::default(),
            backend: DbBackendSpec::default(),
            template: PromptTemplate::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.corpus_dir.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("corpus_dir is not set".into()));
        }
        if self.query_file.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("query_file is not set".into()));
        }
        if self.variants.is_empty() {
            return Err(ConfigError::Invalid("no variants requested".into()));
        }
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be at least 1".into()));
        }
        if self.concurrency == 0 {
            return Err(ConfigError::Invalid(
                "concurrency must be at least 1".into(),
            ));
        }
        if self.generator.kind == GeneratorKind::Http && self.generator.endpoint.is_none() {
            return Err(ConfigError::Invalid(
                "generator kind `http` requires an endpoint".into(),
            ));
        }
        if self.generator.kind == GeneratorKind::FixedMap && self.generator.fixed_map_file.is_none()
        {
            return Err(ConfigError::Invalid(
                "generator kind `fixed-map` requires fixed_map_file".into(),
            ));
        }
        self.embedder
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.thresholds
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.template
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Query file path resolved against the corpus directory.
    pub fn query_path(&self) -> PathBuf {
        if self.query_file.is_absolute() {
            self.query_file.clone()
        } else {
            self.corpus_dir.join(&self.query_file)
        }
    }
}

/// Secrets and endpoint overrides taken from the environment. Tokens live
/// only here, never inside [`RunConfig`], so config snapshots stay free of
/// credentials.
#[derive(Debug, Clone, Default)]
pub struct EnvSecrets {
    pub embed_auth: Option<String>,
    pub gen_auth: Option<String>,
}

pub const ENV_EMBED_ENDPOINT: &str = "RAGSQL_EMBED_ENDPOINT";
pub const ENV_EMBED_AUTH: &str = "RAGSQL_EMBED_AUTH";
pub const ENV_GEN_ENDPOINT: &str = "RAGSQL_GEN_ENDPOINT";
pub const ENV_GEN_AUTH: &str = "RAGSQL_GEN_AUTH";

fn env_non_empty(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

/// Applies endpoint overrides from the environment to `config` and returns
/// the auth tokens found there.
pub fn apply_env_overrides(config: &mut RunConfig) -> EnvSecrets {
    if let Some(url) = env_non_empty(ENV_EMBED_ENDPOINT) {
        config.embedder.endpoint = Some(url);
    }
    if let Some(url) = env_non_empty(ENV_GEN_ENDPOINT) {
        config.generator.endpoint = Some(url);
    }
    EnvSecrets {
        embed_auth: env_non_empty(ENV_EMBED_AUTH),
        gen_auth: env_non_empty(ENV_GEN_AUTH),
    }
}

/// Loads and validates a TOML config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// Parses a variant selector: comma-separated labels and inclusive ranges,
/// e.g. `V1..V7`, `V2`, or `V1..V3,V5`. Duplicates collapse; order is
/// ascending.
pub fn parse_variant_selector(selector: &str) -> Result<Vec<DocVariant>, ConfigError> {
    let mut picked = [false; DocVariant::ALL.len()];
    for part in selector.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(ConfigError::BadVariantSelector(selector.to_string()));
        }
        if let Some((low, high)) = part.split_once("..") {
            let low: DocVariant = low
                .trim()
                .parse()
                .map_err(|_| ConfigError::BadVariantSelector(selector.to_string()))?;
            let high: DocVariant = high
                .trim()
                .parse()
                .map_err(|_| ConfigError::BadVariantSelector(selector.to_string()))?;
            let (a, b) = (low as usize, high as usize);
            if a > b {
                return Err(ConfigError::BadVariantSelector(selector.to_string()));
            }
            for slot in &mut picked[a..=b] {
                *slot = true;
            }
        } else {
            let variant: DocVariant = part
                .parse()
                .map_err(|_| ConfigError::BadVariantSelector(selector.to_string()))?;
            picked[variant as usize] = true;
        }
    }
    Ok(DocVariant::ALL
        .iter()
        .copied()
        .filter(|v| picked[*v as usize])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_the_reference_setup() {
        let config = RunConfig::default();
        assert_eq!(config.k, 3);
        assert_eq!(config.gen_config.temperature, 0.01);
        assert_eq!(config.gen_config.top_p, 0.7);
        assert_eq!(config.gen_config.max_new_tokens, 1024);
        assert_eq!(config.thresholds.edit_max, 0.5);
        assert_eq!(config.thresholds.embed_min, 0.85);
        assert_eq!(config.thresholds.fuzzy_min, 75);
        assert_eq!(config.variants, DocVariant::ALL.to_vec());
        assert_eq!(config.seed, 42);
    }

    #[test]
    fn minimal_toml_fills_in_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            concat!(
                "corpus_dir = \"testdata/mini_corpus\"\n",
                "query_file = \"queries.jsonl\"\n",
            ),
        )
        .unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.k, 3);
        assert_eq!(config.generator.kind, GeneratorKind::EchoGold);
        assert_eq!(
            config.query_path(),
            Path::new("testdata/mini_corpus/queries.jsonl")
        );
    }

    #[test]
    fn partial_sections_fill_in_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            concat!(
                "corpus_dir = \"c\"\n",
                "\n",
                "[embedder]\n",
                "kind = \"deterministic-test\"\n",
                "\n",
                "[backend]\n",
                "kind = \"embedded\"\n",
                "\n",
                "[gen_config]\n",
                "temperature = 0.3\n",
                "\n",
                "[thresholds]\n",
                "fuzzy_min = 80\n",
            ),
        )
        .unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.embedder.dim, EmbedderSpec::default().dim);
        assert_eq!(config.backend.connection, "");
        assert_eq!(config.backend.statement_timeout_ms, 5_000);
        assert_eq!(config.gen_config.temperature, 0.3);
        assert_eq!(config.gen_config.top_p, 0.7);
        assert_eq!(config.thresholds.fuzzy_min, 80);
        assert_eq!(config.thresholds.edit_max, 0.5);
    }

    #[test]
    fn sections_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            concat!(
                "corpus_dir = \"c\"\n",
                "variants = [\"V2\", \"V5\"]\n",
                "k = 5\n",
                "seed = 7\n",
                "\n",
                "[generator]\n",
                "kind = \"corrupt-add-id-column\"\n",
                "\n",
                "[gen_config]\n",
                "temperature = 0.2\n",
                "top_p = 0.9\n",
                "max_new_tokens = 256\n",
                "return_full_text = false\n",
                "\n",
                "[backend]\n",
                "kind = \"embedded\"\n",
                "connection = \"/tmp/fixture.db\"\n",
            ),
        )
        .unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.variants, vec![DocVariant::V2, DocVariant::V5]);
        assert_eq!(config.k, 5);
        assert_eq!(config.seed, 7);
        assert_eq!(config.generator.kind, GeneratorKind::CorruptAddIdColumn);
        assert_eq!(config.gen_config.temperature, 0.2);
        assert_eq!(config.backend.connection, "/tmp/fixture.db");
    }

    #[test]
    fn validation_catches_missing_pieces() {
        let mut config = RunConfig::default();
        assert!(config.validate().is_err(), "empty corpus_dir must fail");
        config.corpus_dir = PathBuf::from("c");
        config.validate().unwrap();
        config.k = 0;
        assert!(config.validate().is_err());
        config.k = 3;
        config.generator.kind = GeneratorKind::Http;
        assert!(
            config.validate().is_err(),
            "http without endpoint must fail"
        );
        config.generator.endpoint = Some("http://localhost:1".into());
        config.validate().unwrap();
    }

    #[test]
    fn selector_parses_ranges_lists_and_mixtures() {
        assert_eq!(
            parse_variant_selector("V1..V7").unwrap(),
            DocVariant::ALL.to_vec()
        );
        assert_eq!(
            parse_variant_selector("V2,V5").unwrap(),
            vec![DocVariant::V2, DocVariant::V5]
        );
        assert_eq!(
            parse_variant_selector("v1..v3,V7").unwrap(),
            vec![
                DocVariant::V1,
                DocVariant::V2,
                DocVariant::V3,
                DocVariant::V7
            ]
        );
        assert_eq!(
            parse_variant_selector("V3,V1..V2,V3").unwrap(),
            vec![DocVariant::V1, DocVariant::V2, DocVariant::V3]
        );
        for bad in ["", "V8", "V3..V1", "V1..", "x", "V1;V2"] {
            assert!(parse_variant_selector(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn config_snapshot_never_contains_tokens() {
        let config = RunConfig::default();
        let json = serde_json::to_string(&config).unwrap();
        let toml_text = toml::to_string(&config).unwrap();
        for dump in [json, toml_text] {
            // `max_new_tokens` is a sampling parameter, not a credential.
            let dump = dump.to_lowercase().replace("max_new_tokens", "");
            assert!(!dump.contains("auth"));
            assert!(!dump.contains("token"));
            assert!(!dump.contains("secret"));
            assert!(!dump.contains("bearer"));
        }
    }

    #[test]
    fn env_overrides_set_endpoints_and_return_tokens() {
        // Serialize access to the process environment within this test.
        let mut config = RunConfig::default();
        std::env::set_var(ENV_GEN_ENDPOINT, "http://gen.example/v1");
        std::env::set_var(ENV_GEN_AUTH, "tok-123");
        std::env::set_var(ENV_EMBED_ENDPOINT, "");
        std::env::remove_var(ENV_EMBED_AUTH);
        let secrets = apply_env_overrides(&mut config);
        assert_eq!(
            config.generator.endpoint.as_deref(),
            Some("http://gen.example/v1")
        );
        assert_eq!(config.embedder.endpoint, None, "empty env value is ignored");
        assert_eq!(secrets.gen_auth.as_deref(), Some("tok-123"));
        assert_eq!(secrets.embed_auth, None);
        std::env::remove_var(ENV_GEN_ENDPOINT);
        std::env::remove_var(ENV_GEN_AUTH);
        std::env::remove_var(ENV_EMBED_ENDPOINT);
    }
}
