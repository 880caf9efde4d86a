//! Natural-language table descriptions.
//!
//! Descriptions are built from a fixed sentence template per schema element,
//! so two runs over the same schema produce identical text. A hand-written
//! override replaces the generated text wholesale when provided.

use super::ddl::TableSchema;

/// Renders a one-paragraph description of `schema`, or returns the override
/// verbatim (trimmed) when one is supplied.
pub fn describe_table(schema: &TableSchema, override_text: Option<&str>) -> String {
    if let Some(text) = override_text {
        return text.trim().to_string();
    }
    let mut sentences = Vec::new();
    sentences.push(format!(
        "The table \"{}\" has {} column{}.",
        schema.name,
        schema.columns.len(),
        if schema.columns.len() == 1 { "" } else { "s" }
    ));
    for col in &schema.columns {
        sentences.push(format!(
            "The column \"{}\" stores a value of type {}.",
            col.name,
            col.sql_type.canonical()
        ));
    }
    if !schema.primary_key.is_empty() {
        let quoted: Vec<String> = schema
            .primary_key
            .iter()
            .map(|c| format!("\"{c}\""))
            .collect();
        sentences.push(format!("The primary key is {}.", quoted.join(", ")));
    }
    for fk in &schema.foreign_keys {
        sentences.push(format!(
            "The column \"{}\" references \"{}\" in table \"{}\".",
            fk.column, fk.ref_column, fk.ref_table
        ));
    }
    sentences.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ddl::parse_ddl;

    const SRC: &str = r#"CREATE TABLE "farm_competition" (
"Competition_ID" int,
"Theme" text,
"Host_city_ID" int,
PRIMARY KEY ("Competition_ID"),
FOREIGN KEY ("Host_city_ID") REFERENCES "city"("City_ID")
);"#;

    #[test]
    fn mentions_every_column_key_and_reference() {
        let schema = parse_ddl(SRC).unwrap().remove(0);
        let text = describe_table(&schema, None);
        assert!(text.starts_with("The table \"farm_competition\" has 3 columns."));
        assert!(text.contains("The column \"Theme\" stores a value of type text."));
        assert!(text.contains("The primary key is \"Competition_ID\"."));
        assert!(
            text.contains("The column \"Host_city_ID\" references \"City_ID\" in table \"city\".")
        );
    }

    #[test]
    fn is_deterministic() {
        let schema = parse_ddl(SRC).unwrap().remove(0);
        assert_eq!(describe_table(&schema, None), describe_table(&schema, None));
    }

    #[test]
    fn override_replaces_generated_text() {
        let schema = parse_ddl(SRC).unwrap().remove(0);
        let text = describe_table(&schema, Some("  Annual farming competitions.\n"));
        assert_eq!(text, "Annual farming competitions.");
    }

    #[test]
    fn column_order_only_reorders_sentences() {
        let a = parse_ddl("CREATE TABLE t (\"x\" int, \"y\" text);")
            .unwrap()
            .remove(0);
        let b = parse_ddl("CREATE TABLE t (\"y\" text, \"x\" int);")
            .unwrap()
            .remove(0);
        let da = describe_table(&a, None);
        let db = describe_table(&b, None);
        assert_ne!(da, db);
        let sentences = |text: &str| {
            let mut parts: Vec<String> = text
                .trim_end_matches('.')
                .split(". ")
                .map(str::to_string)
                .collect();
            parts.sort_unstable();
            parts
        };
        assert_eq!(sentences(&da), sentences(&db));
    }
}
