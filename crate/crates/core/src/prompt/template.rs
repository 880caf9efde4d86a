//! The completion prompt and its assembly.
//!
//! The default template is pinned byte for byte, including the hard line
//! wraps inside the instruction bullets and the trailing space each wrapped
//! line carries. Generation quality is sensitive to prompt framing, so the
//! template is data, not code: alternative serving stacks can swap in their
//! own header and trailer while keeping the assembly rules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::util::sha256_hex;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("no documents to place in the prompt")]
    EmptyContext,
    #[error("invalid template: {0}")]
    BadTemplate(String),
}

/// Chat-style header: opens the user turn and states the question.
const DEFAULT_HEADER: &str = concat!(
    "<|begin_of_text|><|start_header_id|>user<|end_header_id|>\n",
    "Generate a SQL query to answer this question: `{question}`",
);

/// The nine instruction bullets. Wrapped lines end with a trailing space
/// before the newline; both are significant.
const DEFAULT_INSTRUCTIONS: &str = concat!(
    "### Instructions\n",
    "- Given an input question, create a syntactically correct query to run, then \n",
    "look at the results of the query and return the answer.\n",
    "- Never query for all the columns from a specific table; only ask for the \n",
    "relevant columns given the question.\n",
    "- Only return the columns the user asks for; do not give any additional ID \n",
    "column that the user does not ask for explicitly.\n",
    "- Do not add ORDER BY in the query if the user has not explicitly asked to \n",
    "order it.\n",
    "- If you cannot answer the question with the available database schema, \n",
    "return 'I do not know.'\n",
    "- Make sure that you never return two columns with the same name, especially \n",
    "after joining two tables. You can differentiate the same column name by \n",
    "applying column_name + table_name.\n",
    "- DO NOT make any DML statements (INSERT, UPDATE, DELETE, DROP, etc.) to the \n",
    "database.\n",
    "- If you are fetching data from a table only then use its columns to filter \n",
    "out the data.\n",
    "- You MUST double-check your query before executing it. If you get an error \n",
    "while executing a query, rewrite the query and try again.",
);

/// Closes the user turn directly after the last document and primes a
/// fenced SQL continuation.
const DEFAULT_TRAILER: &str = concat!(
    "<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n",
    "The following SQL query best answers the question `{question}`:\n",
    "```sql\n",
);

const QUESTION_PLACEHOLDER: &str = "{question}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub header: String,
    pub instruction_block: String,
    pub ddl_section_label: String,
    pub trailer: String,
}

impl Default for PromptTemplate {
    fn default() -> PromptTemplate {
        PromptTemplate {
            header: DEFAULT_HEADER.to_string(),
            instruction_block: DEFAULT_INSTRUCTIONS.to_string(),
            ddl_section_label: "DDL statements:".to_string(),
            trailer: DEFAULT_TRAILER.to_string(),
        }
    }
}

impl PromptTemplate {
    /// A usable template holds exactly two question placeholders across its
    /// parts and a non-empty document section label.
    pub fn validate(&self) -> Result<(), PromptError> {
        let count = [
            &self.header,
            &self.instruction_block,
            &self.ddl_section_label,
            &self.trailer,
        ]
        .iter()
        .map(|part| part.matches(QUESTION_PLACEHOLDER).count())
        .sum::<usize>();
        if count != 2 {
            return Err(PromptError::BadTemplate(format!(
                "expected exactly 2 `{QUESTION_PLACEHOLDER}` placeholders, found {count}"
            )));
        }
        if self.ddl_section_label.trim().is_empty() {
            return Err(PromptError::BadTemplate(
                "document section label is empty".to_string(),
            ));
        }
        Ok(())
    }
}

/// A fully assembled prompt plus its size accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub question: String,
    pub doc_table_names: Vec<String>,
    pub prompt_text: String,
    pub char_len: usize,
    pub est_tokens: usize,
}

impl PromptRecord {
    /// Stable digest of the prompt text; the generation cache key.
    pub fn prompt_hash(&self) -> String {
        sha256_hex(self.prompt_text.as_bytes())
    }
}

/// Assembles the prompt: header, blank line, instructions, blank line, the
/// document section (label, newline, documents separated by blank lines),
/// then the trailer immediately after the last document.
pub fn build_prompt(
    question: &str,
    docs: &[&Document],
    template: &PromptTemplate,
) -> Result<PromptRecord, PromptError> {
    if question.trim().is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    if docs.is_empty() {
        return Err(PromptError::EmptyContext);
    }
    template.validate()?;

    let mut ddl_section = String::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            ddl_section.push_str("\n\n");
        }
        ddl_section.push_str(&doc.text);
    }

    let prompt_text = format!(
        "{header}\n\n{instructions}\n\n{label}\n{ddl_section}{trailer}",
        header = template.header.replace(QUESTION_PLACEHOLDER, question),
        instructions = template.instruction_block,
        label = template.ddl_section_label,
        trailer = template.trailer.replace(QUESTION_PLACEHOLDER, question),
    );

    let char_len = prompt_text.chars().count();
    Ok(PromptRecord {
        question: question.to_string(),
        doc_table_names: docs.iter().map(|d| d.table_name.clone()).collect(),
        prompt_text,
        char_len,
        est_tokens: char_len.div_ceil(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, parse_ddl, DocVariant};
    use std::collections::BTreeMap;

    const FARM_DDL: &str = concat!(
        "CREATE TABLE \"farm\" (\n",
        "\"Farm_ID\" int,\n",
        "\"Year\" int,\n",
        "\"Total_Horses\" real,\n",
        "\"Working_Horses\" real,\n",
        "\"Total_Cattle\" real,\n",
        "\"Oxen\" real,\n",
        "\"Bulls\" real,\n",
        "\"Cows\" real,\n",
        "\"Pigs\" real,\n",
        "\"Sheep_and_Goats\" real,\n",
        "PRIMARY KEY (\"Farm_ID\")\n",
        ");",
    );

    const FARM_COMPETITION_DDL: &str = concat!(
        "CREATE TABLE \"farm_competition\" (\n",
        "\"Competition_ID\" int,\n",
        "\"Year\" int,\n",
        "\"Theme\" text,\n",
        "\"Host_city_ID\" int,\n",
        "\"Hosts\" text,\n",
        "PRIMARY KEY (\"Competition_ID\"),\n",
        "FOREIGN KEY (`Host_city_ID`) REFERENCES `city`(`City_ID`)\n",
        ");",
    );

    const COMPETITION_RECORD_DDL: &str = concat!(
        "CREATE TABLE \"competition_record\" (\n",
        "\"Competition_ID\" int,\n",
        "\"Farm_ID\" int,\n",
        "\"Rank\" int,\n",
        "PRIMARY KEY (\"Competition_ID\",\"Farm_ID\"),\n",
        "FOREIGN KEY (`Competition_ID`) REFERENCES `farm_competition`(`Competition_ID`),\n",
        "FOREIGN KEY (`Farm_ID`) REFERENCES `farm`(`Farm_ID`)\n",
        ");",
    );

    /// The fully rendered reference prompt for the three-table farm context,
    /// question "How many farms are there?". Wrapped instruction lines keep
    /// their trailing space; documents are separated by one blank line; the
    /// end-of-turn marker follows the last document with no newline between.
    fn reference_prompt() -> String {
        [
            "<|begin_of_text|><|start_header_id|>user<|end_header_id|>\n",
            "Generate a SQL query to answer this question: `How many farms are there?`\n",
            "\n",
            "### Instructions\n",
            "- Given an input question, create a syntactically correct query to run, then \n",
            "look at the results of the query and return the answer.\n",
            "- Never query for all the columns from a specific table; only ask for the \n",
            "relevant columns given the question.\n",
            "- Only return the columns the user asks for; do not give any additional ID \n",
            "column that the user does not ask for explicitly.\n",
            "- Do not add ORDER BY in the query if the user has not explicitly asked to \n",
            "order it.\n",
            "- If you cannot answer the question with the available database schema, \n",
            "return 'I do not know.'\n",
            "- Make sure that you never return two columns with the same name, especially \n",
            "after joining two tables. You can differentiate the same column name by \n",
            "applying column_name + table_name.\n",
            "- DO NOT make any DML statements (INSERT, UPDATE, DELETE, DROP, etc.) to the \n",
            "database.\n",
            "- If you are fetching data from a table only then use its columns to filter \n",
            "out the data.\n",
            "- You MUST double-check your query before executing it. If you get an error \n",
            "while executing a query, rewrite the query and try again.\n",
            "\n",
            "DDL statements:\n",
            FARM_DDL,
            "\n\n",
            FARM_COMPETITION_DDL,
            "\n\n",
            COMPETITION_RECORD_DDL,
            "<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n",
            "The following SQL query best answers the question `How many farms are there?`:\n",
            "```sql\n",
        ]
        .concat()
    }

    fn farm_context() -> crate::corpus::Corpus {
        let ddl = format!("{FARM_DDL}\n\n{FARM_COMPETITION_DDL}\n\n{COMPETITION_RECORD_DDL}");
        let schemas = parse_ddl(&ddl).unwrap();
        build_corpus(&schemas, DocVariant::V1, 7, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn default_template_is_valid_with_two_placeholders() {
        PromptTemplate::default().validate().unwrap();
    }

    #[test]
    fn renders_the_reference_prompt_byte_for_byte() {
        let corpus = farm_context();
        let docs = [
            corpus.document("farm").unwrap(),
            corpus.document("farm_competition").unwrap(),
            corpus.document("competition_record").unwrap(),
        ];
        let record = build_prompt(
            "How many farms are there?",
            &docs,
            &PromptTemplate::default(),
        )
        .unwrap();
        assert_eq!(record.prompt_text, reference_prompt());
        assert_eq!(
            record.doc_table_names,
            vec!["farm", "farm_competition", "competition_record"]
        );
    }

    #[test]
    fn question_appears_exactly_twice() {
        let corpus = farm_context();
        let docs = [corpus.document("farm").unwrap()];
        let record = build_prompt(
            "How many farms are there?",
            &docs,
            &PromptTemplate::default(),
        )
        .unwrap();
        assert_eq!(
            record
                .prompt_text
                .matches("How many farms are there?")
                .count(),
            2
        );
        assert_eq!(
            record.prompt_text.matches("CREATE TABLE \"farm\"").count(),
            1
        );
    }

    #[test]
    fn size_accounting_matches_the_text() {
        let corpus = farm_context();
        let docs = [corpus.document("farm").unwrap()];
        let record = build_prompt("q", &docs, &PromptTemplate::default()).unwrap();
        assert_eq!(record.char_len, record.prompt_text.chars().count());
        assert_eq!(record.est_tokens, record.char_len.div_ceil(4));
    }

    #[test]
    fn richer_variants_make_strictly_longer_prompts() {
        let schemas = parse_ddl(FARM_DDL).unwrap();
        let template = PromptTemplate::default();
        let mut last = 0usize;
        for variant in [
            DocVariant::V2,
            DocVariant::V3,
            DocVariant::V4,
            DocVariant::V5,
            DocVariant::V6,
            DocVariant::V7,
        ] {
            let corpus = build_corpus(&schemas, variant, 7, &BTreeMap::new()).unwrap();
            let docs = [corpus.document("farm").unwrap()];
            let record = build_prompt("q", &docs, &template).unwrap();
            if variant != DocVariant::V2 && variant != DocVariant::V5 {
                assert!(
                    record.char_len > last,
                    "{variant} prompt not longer than its base"
                );
            }
            last = record.char_len;
        }
    }

    #[test]
    fn identical_inputs_give_identical_text_and_hash() {
        let corpus = farm_context();
        let docs = [
            corpus.document("farm").unwrap(),
            corpus.document("competition_record").unwrap(),
        ];
        let template = PromptTemplate::default();
        let a = build_prompt("q", &docs, &template).unwrap();
        let b = build_prompt("q", &docs, &template).unwrap();
        assert_eq!(a.prompt_text, b.prompt_text);
        assert_eq!(a.prompt_hash(), b.prompt_hash());
    }

    #[test]
    fn document_order_changes_the_prompt() {
        let corpus = farm_context();
        let forward = [
            corpus.document("farm").unwrap(),
            corpus.document("farm_competition").unwrap(),
        ];
        let backward = [
            corpus.document("farm_competition").unwrap(),
            corpus.document("farm").unwrap(),
        ];
        let template = PromptTemplate::default();
        let a = build_prompt("q", &forward, &template).unwrap();
        let b = build_prompt("q", &backward, &template).unwrap();
        assert_ne!(a.prompt_hash(), b.prompt_hash());
    }

    #[test]
    fn rejects_empty_question_and_empty_context() {
        let corpus = farm_context();
        let docs = [corpus.document("farm").unwrap()];
        let template = PromptTemplate::default();
        assert!(matches!(
            build_prompt("  ", &docs, &template),
            Err(PromptError::EmptyQuestion)
        ));
        assert!(matches!(
            build_prompt("q", &[], &template),
            Err(PromptError::EmptyContext)
        ));
    }

    #[test]
    fn rejects_templates_with_wrong_placeholder_count() {
        let mut template = PromptTemplate::default();
        template.trailer = "no placeholder here".to_string();
        assert!(matches!(
            template.validate(),
            Err(PromptError::BadTemplate(_))
        ));
    }
}
