//! Offline completion clients for tests and dry runs.
//!
//! Stubs recover the question from the prompt text (the template wraps it
//! in backticks) and answer from a fixed table. The corrupting stub answers
//! with the gold SQL deliberately damaged in one known way, which gives the
//! evaluation metrics a negative control with a predictable signature.

use std::collections::BTreeMap;

use super::generate::{ClientKind, CompletionClient, GenConfig, GenError};
use crate::analyzer::{parse_sql, tokenize, Query, SqlTok, TableRef};
use crate::corpus::{QueryCase, TableSchema};

/// Finds which known question this prompt embeds and returns its mapped
/// value. Questions appear in the prompt wrapped in backticks.
fn answer_for<'m>(prompt: &str, map: &'m BTreeMap<String, String>) -> Result<&'m str, GenError> {
    map.iter()
        .find(|(question, _)| prompt.contains(&format!("`{question}`")))
        .map(|(_, answer)| answer.as_str())
        .ok_or(GenError::UnknownCase)
}

/// Answers every case with its own gold SQL: the pipeline's positive
/// control, expected to score perfectly on every metric.
pub struct EchoGoldClient {
    map: BTreeMap<String, String>,
}

impl EchoGoldClient {
    pub fn new(cases: &[QueryCase]) -> EchoGoldClient {
        EchoGoldClient {
            map: cases
                .iter()
                .map(|c| (c.question.clone(), c.gold_sql.clone()))
                .collect(),
        }
    }
}

impl CompletionClient for EchoGoldClient {
    fn kind(&self) -> ClientKind {
        ClientKind::Stub
    }
    fn complete(&self, prompt: &str, _config: &GenConfig) -> Result<String, GenError> {
        answer_for(prompt, &self.map).map(str::to_string)
    }
}

/// Answers from an arbitrary question-to-SQL map.
pub struct FixedMapClient {
    map: BTreeMap<String, String>,
}

impl FixedMapClient {
    pub fn new(map: BTreeMap<String, String>) -> FixedMapClient {
        FixedMapClient { map }
    }
}

impl CompletionClient for FixedMapClient {
    fn kind(&self) -> ClientKind {
        ClientKind::Stub
    }
    fn complete(&self, prompt: &str, _config: &GenConfig) -> Result<String, GenError> {
        answer_for(prompt, &self.map).map(str::to_string)
    }
}

/// Answers with the gold SQL plus one redundant column: the primary key of
/// the query's first table, appended to the SELECT list. The negative
/// control: component matching should flag exactly the extra column, and
/// execution should match leniently but not exactly.
pub struct CorruptAddIdClient {
    map: BTreeMap<String, String>,
    schemas: BTreeMap<String, TableSchema>,
}

impl CorruptAddIdClient {
    pub fn new(cases: &[QueryCase], schemas: &[TableSchema]) -> CorruptAddIdClient {
        CorruptAddIdClient {
            map: cases
                .iter()
                .map(|c| (c.question.clone(), c.gold_sql.clone()))
                .collect(),
            schemas: schemas
                .iter()
                .map(|s| (s.name.to_lowercase(), s.clone()))
                .collect(),
        }
    }
}

impl CompletionClient for CorruptAddIdClient {
    fn kind(&self) -> ClientKind {
        ClientKind::Stub
    }
    fn complete(&self, prompt: &str, _config: &GenConfig) -> Result<String, GenError> {
        let gold = answer_for(prompt, &self.map)?;
        Ok(append_first_pk_column(gold, &self.schemas).unwrap_or_else(|| gold.to_string()))
    }
}

/// Appends the first table's primary-key column to the SELECT list, keeping
/// the rest of the query byte-identical. Qualified with the table's alias
/// (or name) when the FROM clause holds more than one table, bare otherwise.
/// Returns None when the query has no usable FROM table to draw from.
fn append_first_pk_column(sql: &str, schemas: &BTreeMap<String, TableSchema>) -> Option<String> {
    let query = parse_sql(sql).ok()?;
    let Query::Select(select) = &query else {
        return None;
    };
    let from = select.from.as_ref()?;
    let refs: Vec<&TableRef> = from.refs().collect();
    let TableRef::Table { name, alias } = refs.first()? else {
        return None;
    };
    let schema = schemas.get(&name.to_lowercase())?;
    let column = schema
        .primary_key
        .first()
        .cloned()
        .or_else(|| schema.columns.first().map(|c| c.name.clone()))?;
    let rendered = if refs.len() > 1 {
        format!("{}.{column}", alias.as_deref().unwrap_or(name.as_str()))
    } else {
        column
    };

    let tokens = tokenize(sql).ok()?;
    let mut depth = 0i32;
    let from_pos = tokens.iter().find_map(|t| {
        match t.tok {
            SqlTok::LParen => depth += 1,
            SqlTok::RParen => depth -= 1,
            _ => {}
        }
        (depth == 0 && t.is_kw("FROM")).then_some(t.pos)
    })?;
    Some(format!(
        "{}, {rendered} {}",
        sql[..from_pos].trim_end(),
        &sql[from_pos..]
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, parse_ddl, parse_query_cases, DocVariant};
    use crate::prompt::template::{build_prompt, PromptTemplate};

    const DDL: &str = concat!(
        "CREATE TABLE \"farm\" (\n",
        "\"Farm_ID\" int,\n",
        "\"Year\" int,\n",
        "\"Total_Horses\" real,\n",
        "PRIMARY KEY (\"Farm_ID\")\n",
        ");\n\n",
        "CREATE TABLE \"competition_record\" (\n",
        "\"Competition_ID\" int,\n",
        "\"Farm_ID\" int,\n",
        "\"Rank\" int,\n",
        "PRIMARY KEY (\"Competition_ID\",\"Farm_ID\")\n",
        ");\n\n",
        "CREATE TABLE \"no_pk\" (\n",
        "\"a\" int,\n",
        "\"b\" int\n",
        ");",
    );

    fn cases() -> Vec<QueryCase> {
        parse_query_cases(concat!(
            r#"{"id": "c1", "domain": "farm", "question": "How many farms are there?", "gold_sql": "SELECT count(*) FROM farm"}"#,
            "\n",
            r#"{"id": "c2", "domain": "farm", "question": "List farm years.", "gold_sql": "SELECT Year FROM farm"}"#,
        ))
        .unwrap()
    }

    fn prompt_for(question: &str) -> String {
        let schemas = parse_ddl(DDL).unwrap();
        let corpus = build_corpus(&schemas, DocVariant::V2, 5, &BTreeMap::new()).unwrap();
        let docs = [corpus.document("farm").unwrap()];
        build_prompt(question, &docs, &PromptTemplate::default())
            .unwrap()
            .prompt_text
    }

    fn schemas() -> Vec<TableSchema> {
        parse_ddl(DDL).unwrap()
    }

    #[test]
    fn echo_gold_returns_the_cases_gold_sql() {
        let client = EchoGoldClient::new(&cases());
        let out = client
            .complete(
                &prompt_for("How many farms are there?"),
                &GenConfig::default(),
            )
            .unwrap();
        assert_eq!(out, "SELECT count(*) FROM farm");
    }

    #[test]
    fn unknown_question_is_an_error() {
        let client = EchoGoldClient::new(&cases());
        assert!(matches!(
            client.complete(&prompt_for("What is this?"), &GenConfig::default()),
            Err(GenError::UnknownCase)
        ));
    }

    #[test]
    fn fixed_map_answers_from_its_table() {
        let map = BTreeMap::from([(
            "How many farms are there?".to_string(),
            "SELECT 1".to_string(),
        )]);
        let client = FixedMapClient::new(map);
        let out = client
            .complete(
                &prompt_for("How many farms are there?"),
                &GenConfig::default(),
            )
            .unwrap();
        assert_eq!(out, "SELECT 1");
    }

    #[test]
    fn corrupt_client_appends_the_primary_key() {
        let client = CorruptAddIdClient::new(&cases(), &schemas());
        let out = client
            .complete(&prompt_for("List farm years."), &GenConfig::default())
            .unwrap();
        assert_eq!(out, "SELECT Year, Farm_ID FROM farm");
    }

    #[test]
    fn append_uses_bare_name_for_single_table_queries() {
        assert_eq!(
            append_first_pk_column("SELECT name FROM farm", &schema_map()).unwrap(),
            "SELECT name, Farm_ID FROM farm"
        );
    }

    fn schema_map() -> BTreeMap<String, TableSchema> {
        schemas()
            .into_iter()
            .map(|s| (s.name.to_lowercase(), s))
            .collect()
    }

    #[test]
    fn append_qualifies_when_several_tables_are_in_scope() {
        let out = append_first_pk_column(
            "SELECT T2.Rank FROM farm AS T1 JOIN competition_record AS T2 ON T1.Farm_ID = T2.Farm_ID",
            &schema_map(),
        )
        .unwrap();
        assert_eq!(
            out,
            "SELECT T2.Rank, T1.Farm_ID FROM farm AS T1 JOIN competition_record AS T2 ON T1.Farm_ID = T2.Farm_ID"
        );
    }

    #[test]
    fn append_skips_subquery_from_when_finding_the_outer_clause() {
        let out = append_first_pk_column(
            "SELECT (SELECT max(Rank) FROM competition_record) FROM farm",
            &schema_map(),
        )
        .unwrap();
        assert_eq!(
            out,
            "SELECT (SELECT max(Rank) FROM competition_record), Farm_ID FROM farm"
        );
    }

    #[test]
    fn append_falls_back_to_the_first_column_without_a_primary_key() {
        assert_eq!(
            append_first_pk_column("SELECT b FROM no_pk", &schema_map()).unwrap(),
            "SELECT b, a FROM no_pk"
        );
    }

    #[test]
    fn append_gives_up_gracefully_on_unknown_tables() {
        assert!(append_first_pk_column("SELECT x FROM mystery", &schema_map()).is_none());
    }

    #[test]
    fn composite_key_uses_its_first_column() {
        assert_eq!(
            append_first_pk_column("SELECT Rank FROM competition_record", &schema_map()).unwrap(),
            "SELECT Rank, Competition_ID FROM competition_record"
        );
    }
}
