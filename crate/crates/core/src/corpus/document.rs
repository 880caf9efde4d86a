//! Document variants and corpus assembly.
//!
//! Each table renders into one of seven variants. V1 is the untouched source
//! DDL. V2 is the canonicalized DDL, and every later variant appends
//! material to it: synthetic sample rows (V3, V4), a natural-language
//! description (V5), or both (V6, V7). Sections are separated by a blank
//! line; the two INSERT statements of a pair sit on adjacent lines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ddl::{normalize_ddl, TableSchema};
use super::describe::describe_table;
use super::inserts::{synth_inserts, InsertError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate table `{0}` in corpus")]
    DuplicateTable(String),
    #[error("corpus has no schemas")]
    Empty,
    #[error(transparent)]
    Insert(#[from] InsertError),
    #[error("failed to write `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// The seven document variants, ordered by how much material they carry
/// beyond the schema itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DocVariant {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
}

impl DocVariant {
    pub const ALL: [DocVariant; 7] = [
        DocVariant::V1,
        DocVariant::V2,
        DocVariant::V3,
        DocVariant::V4,
        DocVariant::V5,
        DocVariant::V6,
        DocVariant::V7,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DocVariant::V1 => "V1",
            DocVariant::V2 => "V2",
            DocVariant::V3 => "V3",
            DocVariant::V4 => "V4",
            DocVariant::V5 => "V5",
            DocVariant::V6 => "V6",
            DocVariant::V7 => "V7",
        }
    }

    /// Number of synthetic INSERT statements this variant embeds.
    pub fn insert_count(&self) -> usize {
        match self {
            DocVariant::V1 | DocVariant::V2 | DocVariant::V5 => 0,
            DocVariant::V3 | DocVariant::V6 => 1,
            DocVariant::V4 | DocVariant::V7 => 2,
        }
    }

    /// Whether this variant embeds a table description.
    pub fn has_description(&self) -> bool {
        matches!(self, DocVariant::V5 | DocVariant::V6 | DocVariant::V7)
    }
}

impl std::fmt::Display for DocVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DocVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded = s.trim().to_ascii_uppercase();
        DocVariant::ALL
            .iter()
            .copied()
            .find(|v| v.label() == folded)
            .ok_or_else(|| format!("unknown document variant `{s}` (expected V1..V7)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub table_name: String,
    pub variant: DocVariant,
    pub text: String,
    pub byte_len: usize,
}

impl Document {
    fn new(table_name: String, variant: DocVariant, text: String) -> Document {
        let byte_len = text.len();
        Document {
            table_name,
            variant,
            text,
            byte_len,
        }
    }

    /// File name used when the corpus is written to disk.
    pub fn file_name(&self) -> String {
        format!("{}__{}.txt", self.table_name, self.variant.label())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub variant: DocVariant,
    pub seed: u64,
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn document(&self, table_name: &str) -> Option<&Document> {
        self.documents
            .iter()
            .find(|d| d.table_name.eq_ignore_ascii_case(table_name))
    }
}

/// Renders the document for one table.
pub fn render_document(
    schema: &TableSchema,
    variant: DocVariant,
    seed: u64,
    override_desc: Option<&str>,
) -> Result<Document, InsertError> {
    let mut sections: Vec<String> = Vec::new();
    match variant {
        DocVariant::V1 => sections.push(schema.source_ddl.clone()),
        _ => sections.push(normalize_ddl(schema)),
    }
    if variant.has_description() {
        sections.push(describe_table(schema, override_desc));
    }
    let inserts = variant.insert_count();
    if inserts > 0 {
        sections.push(synth_inserts(schema, inserts, seed)?.join("\n"));
    }
    Ok(Document::new(
        schema.name.clone(),
        variant,
        sections.join("\n\n"),
    ))
}

/// Renders one document per schema. Table names must be unique
/// (case-insensitively); descriptions come from `overrides` when present.
pub fn build_corpus(
    schemas: &[TableSchema],
    variant: DocVariant,
    seed: u64,
    overrides: &BTreeMap<String, String>,
) -> Result<Corpus, CorpusError> {
    if schemas.is_empty() {
        return Err(CorpusError::Empty);
    }
    for (i, a) in schemas.iter().enumerate() {
        for b in schemas.iter().skip(i + 1) {
            if a.name.eq_ignore_ascii_case(&b.name) {
                return Err(CorpusError::DuplicateTable(b.name.clone()));
            }
        }
    }
    let mut documents = Vec::with_capacity(schemas.len());
    for schema in schemas {
        let override_desc = overrides
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(&schema.name))
            .map(|(_, v)| v.as_str());
        documents.push(render_document(schema, variant, seed, override_desc)?);
    }
    Ok(Corpus {
        variant,
        seed,
        documents,
    })
}

/// Writes each document to `dir` as `<table>__<variant>.txt`, returning the
/// paths written.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    std::fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(corpus.documents.len());
    for doc in &corpus.documents {
        let path = dir.join(doc.file_name());
        std::fs::write(&path, &doc.text).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ddl::parse_ddl;

    const FARM: &str = r#"CREATE TABLE "farm" (
"Farm_ID" int,
"Year" int,
"Total_Horses" real,
PRIMARY KEY ("Farm_ID")
);"#;

    fn farm() -> TableSchema {
        parse_ddl(FARM).unwrap().remove(0)
    }

    fn render(variant: DocVariant) -> Document {
        render_document(&farm(), variant, 42, None).unwrap()
    }

    #[test]
    fn v1_is_verbatim_source() {
        assert_eq!(render(DocVariant::V1).text, FARM);
    }

    #[test]
    fn v2_is_normalized_ddl() {
        assert_eq!(render(DocVariant::V2).text, normalize_ddl(&farm()));
    }

    #[test]
    fn sample_variants_nest_by_prefix() {
        let v2 = render(DocVariant::V2).text;
        let v3 = render(DocVariant::V3).text;
        let v4 = render(DocVariant::V4).text;
        assert!(v3.starts_with(&v2));
        assert!(v4.starts_with(&v3));
        let v5 = render(DocVariant::V5).text;
        let v6 = render(DocVariant::V6).text;
        let v7 = render(DocVariant::V7).text;
        assert!(v5.starts_with(&v2));
        assert!(v6.starts_with(&v5));
        assert!(v7.starts_with(&v6));
    }

    #[test]
    fn sizes_increase_with_material() {
        let lens: Vec<usize> = [DocVariant::V2, DocVariant::V3, DocVariant::V4]
            .iter()
            .map(|v| render(*v).byte_len)
            .collect();
        assert!(lens[0] < lens[1] && lens[1] < lens[2]);
        let lens: Vec<usize> = [DocVariant::V5, DocVariant::V6, DocVariant::V7]
            .iter()
            .map(|v| render(*v).byte_len)
            .collect();
        assert!(lens[0] < lens[1] && lens[1] < lens[2]);
    }

    #[test]
    fn sections_are_separated_by_blank_lines() {
        let v3 = render(DocVariant::V3).text;
        assert!(v3.contains(");\n\nINSERT INTO"));
        let v4 = render(DocVariant::V4).text;
        let tail = v4.split("\n\n").last().unwrap();
        assert_eq!(tail.lines().count(), 2, "paired inserts share one section");
        let v5 = render(DocVariant::V5).text;
        assert!(v5.contains(");\n\nThe table \"farm\""));
    }

    #[test]
    fn byte_len_matches_text() {
        for variant in DocVariant::ALL {
            let doc = render(variant);
            assert_eq!(doc.byte_len, doc.text.len());
        }
    }

    #[test]
    fn description_override_reaches_document() {
        let mut overrides = BTreeMap::new();
        overrides.insert("farm".to_string(), "Livestock head counts.".to_string());
        let corpus = build_corpus(&[farm()], DocVariant::V5, 42, &overrides).unwrap();
        assert!(corpus.documents[0].text.contains("Livestock head counts."));
    }

    #[test]
    fn duplicate_tables_rejected() {
        let err = build_corpus(&[farm(), farm()], DocVariant::V1, 42, &BTreeMap::new());
        assert!(matches!(err, Err(CorpusError::DuplicateTable(_))));
    }

    #[test]
    fn empty_schema_list_rejected() {
        let err = build_corpus(&[], DocVariant::V1, 42, &BTreeMap::new());
        assert!(matches!(err, Err(CorpusError::Empty)));
    }

    #[test]
    fn variant_labels_round_trip() {
        for variant in DocVariant::ALL {
            let parsed: DocVariant = variant.label().parse().unwrap();
            assert_eq!(parsed, variant);
        }
        assert!("V8".parse::<DocVariant>().is_err());
        assert_eq!("v3".parse::<DocVariant>().unwrap(), DocVariant::V3);
    }

    #[test]
    fn written_files_follow_naming_scheme() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = build_corpus(&[farm()], DocVariant::V4, 42, &BTreeMap::new()).unwrap();
        let paths = write_corpus(&corpus, dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].ends_with("farm__V4.txt"));
        let on_disk = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(on_disk, corpus.documents[0].text);
    }
}
