//! Structural SQL profiles and their comparison.
//!
//! A profile is three sets derived from the parse tree:
//!
//! * `tables`: every base table named in any FROM clause, lowercased;
//! * `columns`: every column reference, lowercased, written
//!   `table.column` when the reference resolves to exactly one base table
//!   and bare otherwise;
//! * `operations`: which structural devices the query uses, from a fixed
//!   vocabulary (joins, filters, grouping, set operations, aggregates, ...).
//!
//! Sets deliberately ignore multiplicity: using a device twice reads the
//! same as using it once.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::lexer::{tokenize, SqlTok};
use super::parser::{parse_sql, SqlParseError};

/// Structural devices recognized in a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SqlOperation {
    #[serde(rename = "JOIN")]
    Join,
    #[serde(rename = "WHERE")]
    Where,
    #[serde(rename = "GROUP_BY")]
    GroupBy,
    #[serde(rename = "HAVING")]
    Having,
    #[serde(rename = "ORDER_BY")]
    OrderBy,
    #[serde(rename = "LIMIT")]
    Limit,
    #[serde(rename = "UNION")]
    Union,
    #[serde(rename = "INTERSECT")]
    Intersect,
    #[serde(rename = "EXCEPT")]
    Except,
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "NOT_IN")]
    NotIn,
    #[serde(rename = "EXISTS")]
    Exists,
    #[serde(rename = "LIKE")]
    Like,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "SUBQUERY")]
    Subquery,
    #[serde(rename = "AGG_COUNT")]
    AggCount,
    #[serde(rename = "AGG_SUM")]
    AggSum,
    #[serde(rename = "AGG_AVG")]
    AggAvg,
    #[serde(rename = "AGG_MIN")]
    AggMin,
    #[serde(rename = "AGG_MAX")]
    AggMax,
    #[serde(rename = "DISTINCT")]
    Distinct,
    #[serde(rename = "STAR")]
    Star,
}

impl SqlOperation {
    pub fn label(&self) -> &'static str {
        match self {
            SqlOperation::Join => "JOIN",
            SqlOperation::Where => "WHERE",
            SqlOperation::GroupBy => "GROUP_BY",
            SqlOperation::Having => "HAVING",
            SqlOperation::OrderBy => "ORDER_BY",
            SqlOperation::Limit => "LIMIT",
            SqlOperation::Union => "UNION",
            SqlOperation::Intersect => "INTERSECT",
            SqlOperation::Except => "EXCEPT",
            SqlOperation::In => "IN",
            SqlOperation::NotIn => "NOT_IN",
            SqlOperation::Exists => "EXISTS",
            SqlOperation::Like => "LIKE",
            SqlOperation::And => "AND",
            SqlOperation::Or => "OR",
            SqlOperation::Subquery => "SUBQUERY",
            SqlOperation::AggCount => "AGG_COUNT",
            SqlOperation::AggSum => "AGG_SUM",
            SqlOperation::AggAvg => "AGG_AVG",
            SqlOperation::AggMin => "AGG_MIN",
            SqlOperation::AggMax => "AGG_MAX",
            SqlOperation::Distinct => "DISTINCT",
            SqlOperation::Star => "STAR",
        }
    }
}

impl std::fmt::Display for SqlOperation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlComponentProfile {
    pub tables: BTreeSet<String>,
    pub columns: BTreeSet<String>,
    pub operations: BTreeSet<SqlOperation>,
}

/// Comparison of a generated profile against a gold one. `missing_*` is
/// gold-only material, `extra_*` generated-only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMatchReport {
    pub table_match: bool,
    pub column_match: bool,
    pub operation_match: bool,
    pub missing_tables: Vec<String>,
    pub extra_tables: Vec<String>,
    pub missing_columns: Vec<String>,
    pub extra_columns: Vec<String>,
    pub missing_operations: Vec<SqlOperation>,
    pub extra_operations: Vec<SqlOperation>,
    /// True when the generated SQL failed to parse: every match is then
    /// false and the diff lists are empty.
    pub parse_error: bool,
}

impl ComponentMatchReport {
    /// Report shape used when the generated SQL does not parse.
    pub fn parse_failure() -> ComponentMatchReport {
        ComponentMatchReport {
            table_match: false,
            column_match: false,
            operation_match: false,
            missing_tables: Vec::new(),
            extra_tables: Vec::new(),
            missing_columns: Vec::new(),
            extra_columns: Vec::new(),
            missing_operations: Vec::new(),
            extra_operations: Vec::new(),
            parse_error: true,
        }
    }

    pub fn all_match(&self) -> bool {
        self.table_match && self.column_match && self.operation_match
    }
}

#[derive(Debug, Clone)]
enum Binding {
    Base(String),
    Derived,
}

/// One FROM clause's name bindings: alias (or table name) -> base table.
#[derive(Debug, Clone, Default)]
struct Scope {
    bindings: Vec<(String, Binding)>,
}

impl Scope {
    fn from_clause(from: &FromClause) -> Scope {
        let mut scope = Scope::default();
        for table_ref in from.refs() {
            match table_ref {
                TableRef::Table { name, alias } => {
                    let key = alias.as_ref().unwrap_or(name).to_lowercase();
                    scope
                        .bindings
                        .push((key, Binding::Base(name.to_lowercase())));
                }
                TableRef::Subquery { alias, .. } => {
                    if let Some(alias) = alias {
                        scope
                            .bindings
                            .push((alias.to_lowercase(), Binding::Derived));
                    }
                }
            }
        }
        scope
    }

    fn lookup(&self, key: &str) -> Option<&Binding> {
        self.bindings.iter().find(|(k, _)| k == key).map(|(_, b)| b)
    }

    /// The single base table of this scope, if there is exactly one binding
    /// and it is a base table.
    fn sole_base(&self) -> Option<&str> {
        match self.bindings.as_slice() {
            [(_, Binding::Base(table))] => Some(table),
            _ => None,
        }
    }
}

struct ProfileBuilder {
    profile: SqlComponentProfile,
    scopes: Vec<Scope>,
}

impl ProfileBuilder {
    fn op(&mut self, op: SqlOperation) {
        self.profile.operations.insert(op);
    }

    fn add_column(&mut self, qualifier: Option<&str>, name: &str) {
        let name = name.to_lowercase();
        let qualified = match qualifier {
            Some(q) => {
                let key = q.to_lowercase();
                self.scopes
                    .iter()
                    .rev()
                    .find_map(|scope| scope.lookup(&key))
                    .and_then(|binding| match binding {
                        Binding::Base(table) => Some(format!("{table}.{name}")),
                        Binding::Derived => None,
                    })
            }
            None => self
                .scopes
                .last()
                .and_then(|scope| scope.sole_base())
                .map(|table| format!("{table}.{name}")),
        };
        self.profile.columns.insert(qualified.unwrap_or(name));
    }

    fn walk_query(&mut self, query: &Query) {
        match query {
            Query::Select(select) => self.walk_select(select),
            Query::Compound {
                op,
                left,
                right,
                order_by,
                limit,
            } => {
                self.op(match op {
                    SetOp::Union { .. } => SqlOperation::Union,
                    SetOp::Intersect => SqlOperation::Intersect,
                    SetOp::Except => SqlOperation::Except,
                });
                self.walk_query(left);
                self.walk_query(right);
                if !order_by.is_empty() {
                    self.op(SqlOperation::OrderBy);
                    for key in order_by {
                        self.walk_expr(&key.expr);
                    }
                }
                if limit.is_some() {
                    self.op(SqlOperation::Limit);
                }
            }
        }
    }

    fn walk_select(&mut self, select: &Select) {
        let scope = match &select.from {
            Some(from) => {
                if !from.joins.is_empty() {
                    self.op(SqlOperation::Join);
                }
                for table_ref in from.refs() {
                    match table_ref {
                        TableRef::Table { name, .. } => {
                            self.profile.tables.insert(name.to_lowercase());
                        }
                        TableRef::Subquery { query, .. } => {
                            self.op(SqlOperation::Subquery);
                            // A derived table cannot see enclosing scopes.
                            let saved = std::mem::take(&mut self.scopes);
                            self.walk_query(query);
                            self.scopes = saved;
                        }
                    }
                }
                Scope::from_clause(from)
            }
            None => Scope::default(),
        };
        self.scopes.push(scope);

        if select.distinct {
            self.op(SqlOperation::Distinct);
        }
        for item in &select.items {
            match item {
                SelectItem::Star | SelectItem::QualifiedStar(_) => self.op(SqlOperation::Star),
                SelectItem::Expr { expr, .. } => self.walk_expr(expr),
            }
        }
        if let Some(from) = &select.from {
            for join in &from.joins {
                if let Some(on) = &join.on {
                    self.walk_expr(on);
                }
            }
        }
        if let Some(where_clause) = &select.where_clause {
            self.op(SqlOperation::Where);
            self.walk_expr(where_clause);
        }
        if !select.group_by.is_empty() {
            self.op(SqlOperation::GroupBy);
            for expr in &select.group_by {
                self.walk_expr(expr);
            }
        }
        if let Some(having) = &select.having {
            self.op(SqlOperation::Having);
            self.walk_expr(having);
        }
        if !select.order_by.is_empty() {
            self.op(SqlOperation::OrderBy);
            for key in &select.order_by {
                self.walk_expr(&key.expr);
            }
        }
        if select.limit.is_some() {
            self.op(SqlOperation::Limit);
        }

        self.scopes.pop();
    }

    fn walk_subquery_expr(&mut self, query: &Query) {
        // Expression subqueries may correlate with enclosing scopes, so the
        // scope chain stays in place.
        self.op(SqlOperation::Subquery);
        self.walk_query(query);
    }

    fn walk_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Column { qualifier, name } => {
                self.add_column(qualifier.as_deref(), name);
            }
            Expr::Literal(_) => {}
            Expr::Func {
                name,
                distinct,
                star: _,
                args,
            } => {
                match name.to_lowercase().as_str() {
                    "count" => self.op(SqlOperation::AggCount),
                    "sum" => self.op(SqlOperation::AggSum),
                    "avg" => self.op(SqlOperation::AggAvg),
                    "min" => self.op(SqlOperation::AggMin),
                    "max" => self.op(SqlOperation::AggMax),
                    _ => {}
                }
                if *distinct {
                    self.op(SqlOperation::Distinct);
                }
                for arg in args {
                    self.walk_expr(arg);
                }
            }
            Expr::Unary { operand, .. } => self.walk_expr(operand),
            Expr::Binary { op, left, right } => {
                match op {
                    BinaryOp::And => self.op(SqlOperation::And),
                    BinaryOp::Or => self.op(SqlOperation::Or),
                    _ => {}
                }
                self.walk_expr(left);
                self.walk_expr(right);
            }
            Expr::Like { expr, pattern, .. } => {
                self.op(SqlOperation::Like);
                self.walk_expr(expr);
                self.walk_expr(pattern);
            }
            Expr::InList {
                negated,
                expr,
                list,
            } => {
                self.op(if *negated {
                    SqlOperation::NotIn
                } else {
                    SqlOperation::In
                });
                self.walk_expr(expr);
                for item in list {
                    self.walk_expr(item);
                }
            }
            Expr::InSubquery {
                negated,
                expr,
                query,
            } => {
                self.op(if *negated {
                    SqlOperation::NotIn
                } else {
                    SqlOperation::In
                });
                self.walk_expr(expr);
                self.walk_subquery_expr(query);
            }
            Expr::Between {
                expr, low, high, ..
            } => {
                // BETWEEN is parsed but carries no operation tag of its own.
                self.walk_expr(expr);
                self.walk_expr(low);
                self.walk_expr(high);
            }
            Expr::IsNull { expr, .. } => self.walk_expr(expr),
            Expr::Exists { query } => {
                self.op(SqlOperation::Exists);
                self.walk_subquery_expr(query);
            }
            Expr::Subquery(query) => self.walk_subquery_expr(query),
        }
    }
}

/// Derives the structural profile of a parsed query.
pub fn extract_profile(query: &Query) -> SqlComponentProfile {
    let mut builder = ProfileBuilder {
        profile: SqlComponentProfile::default(),
        scopes: Vec::new(),
    };
    builder.walk_query(query);
    builder.profile
}

/// Parses and profiles in one step.
pub fn profile_sql(sql: &str) -> Result<SqlComponentProfile, SqlParseError> {
    Ok(extract_profile(&parse_sql(sql)?))
}

/// Whether the query imposes an output order at its top level.
pub fn has_order_by(query: &Query) -> bool {
    match query {
        Query::Select(s) => !s.order_by.is_empty(),
        Query::Compound { order_by, .. } => !order_by.is_empty(),
    }
}

/// Set comparison with both-direction diffs.
pub fn compare_profiles(
    gold: &SqlComponentProfile,
    gen: &SqlComponentProfile,
) -> ComponentMatchReport {
    fn diff<T: Clone + Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Vec<T> {
        a.difference(b).cloned().collect()
    }
    let missing_tables = diff(&gold.tables, &gen.tables);
    let extra_tables = diff(&gen.tables, &gold.tables);
    let missing_columns = diff(&gold.columns, &gen.columns);
    let extra_columns = diff(&gen.columns, &gold.columns);
    let missing_operations = diff(&gold.operations, &gen.operations);
    let extra_operations = diff(&gen.operations, &gold.operations);
    ComponentMatchReport {
        table_match: missing_tables.is_empty() && extra_tables.is_empty(),
        column_match: missing_columns.is_empty() && extra_columns.is_empty(),
        operation_match: missing_operations.is_empty() && extra_operations.is_empty(),
        missing_tables,
        extra_tables,
        missing_columns,
        extra_columns,
        missing_operations,
        extra_operations,
        parse_error: false,
    }
}

/// Light text canonicalization: collapses whitespace, drops a trailing
/// semicolon, and removes identifier quoting where the identifier is a
/// plain word that needs none. String literals are preserved. Running it
/// twice gives the same text as running it once. Input that does not lex
/// falls back to whitespace normalization.
pub fn canonicalize_sql(sql: &str) -> String {
    let Ok(tokens) = tokenize(sql) else {
        return sql.split_whitespace().collect::<Vec<_>>().join(" ");
    };
    let mut out = String::new();
    let mut prev: Option<&SqlTok> = None;
    for token in tokens.iter() {
        if matches!(token.tok, SqlTok::Semicolon) {
            continue;
        }
        let rendered = match &token.tok {
            SqlTok::Ident { text, quoted } => {
                let safe_bare = !text.is_empty()
                    && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    && !text.chars().next().unwrap().is_ascii_digit()
                    && !super::parser::is_reserved_word(text);
                if *quoted && !safe_bare {
                    format!("\"{text}\"")
                } else {
                    text.clone()
                }
            }
            SqlTok::Number(n) => n.clone(),
            SqlTok::Str(s) => format!("'{}'", s.replace('\'', "''")),
            SqlTok::LParen => "(".to_string(),
            SqlTok::RParen => ")".to_string(),
            SqlTok::Comma => ",".to_string(),
            SqlTok::Dot => ".".to_string(),
            SqlTok::Semicolon => unreachable!(),
            SqlTok::Star => "*".to_string(),
            SqlTok::Plus => "+".to_string(),
            SqlTok::Minus => "-".to_string(),
            SqlTok::Slash => "/".to_string(),
            SqlTok::Percent => "%".to_string(),
            SqlTok::Eq => "=".to_string(),
            SqlTok::NotEq => "!=".to_string(),
            SqlTok::Lt => "<".to_string(),
            SqlTok::Gt => ">".to_string(),
            SqlTok::LtEq => "<=".to_string(),
            SqlTok::GtEq => ">=".to_string(),
        };
        let space = match (&prev, &token.tok) {
            (None, _) => false,
            (_, SqlTok::Comma) | (_, SqlTok::RParen) | (_, SqlTok::Dot) => false,
            (Some(SqlTok::LParen), _) | (Some(SqlTok::Dot), _) => false,
            // Function call: ident directly followed by `(` when the ident
            // is not a reserved word.
            (Some(SqlTok::Ident { text, .. }), SqlTok::LParen)
                if !super::parser::is_reserved_word(text) =>
            {
                false
            }
            _ => true,
        };
        if space {
            out.push(' ');
        }
        out.push_str(&rendered);
        prev = Some(&token.tok);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(sql: &str) -> SqlComponentProfile {
        profile_sql(sql).unwrap()
    }

    fn ops(sql: &str) -> BTreeSet<SqlOperation> {
        profile(sql).operations
    }

    fn names(set: &BTreeSet<String>) -> Vec<&str> {
        set.iter().map(|s| s.as_str()).collect()
    }

    #[test]
    fn simple_select_resolves_columns_to_the_single_table() {
        let p = profile("SELECT Year, Total_Horses FROM farm WHERE Total_Cattle > 5");
        assert_eq!(names(&p.tables), vec!["farm"]);
        assert_eq!(
            names(&p.columns),
            vec!["farm.total_cattle", "farm.total_horses", "farm.year"]
        );
        assert_eq!(p.operations, BTreeSet::from([SqlOperation::Where]));
    }

    #[test]
    fn alias_qualifiers_resolve_through_the_scope() {
        let p = profile(
            "SELECT T1.Rank FROM competition_record AS T1 JOIN farm AS T2 ON T1.Farm_ID = T2.Farm_ID",
        );
        assert_eq!(names(&p.tables), vec!["competition_record", "farm"]);
        assert_eq!(
            names(&p.columns),
            vec![
                "competition_record.farm_id",
                "competition_record.rank",
                "farm.farm_id"
            ]
        );
        assert!(p.operations.contains(&SqlOperation::Join));
    }

    #[test]
    fn unqualified_columns_in_multi_table_scope_stay_bare() {
        let p = profile("SELECT name FROM t, u");
        assert_eq!(names(&p.columns), vec!["name"]);
        assert!(p.operations.contains(&SqlOperation::Join));
    }

    #[test]
    fn unresolvable_qualifier_falls_back_to_bare() {
        let p = profile("SELECT T9.name FROM farm");
        assert_eq!(names(&p.columns), vec!["name"]);
    }

    #[test]
    fn derived_table_columns_are_bare_and_inner_tables_counted() {
        let p = profile("SELECT x.total FROM (SELECT sum(v) AS total FROM sale) AS x");
        assert_eq!(names(&p.tables), vec!["sale"]);
        assert!(p.columns.contains("total"));
        assert!(p.columns.contains("sale.v"));
        assert!(p.operations.contains(&SqlOperation::Subquery));
        assert!(p.operations.contains(&SqlOperation::AggSum));
    }

    #[test]
    fn correlated_subquery_resolves_outer_alias() {
        let p = profile(
            "SELECT a FROM sale AS s WHERE EXISTS (SELECT * FROM store WHERE store.id = s.store_id)",
        );
        assert!(p.columns.contains("sale.store_id"));
        assert!(p.columns.contains("store.id"));
        assert!(p.operations.contains(&SqlOperation::Exists));
        assert!(p.operations.contains(&SqlOperation::Subquery));
        // The EXISTS star is a select item star of the inner query.
        assert!(p.operations.contains(&SqlOperation::Star));
    }

    #[test]
    fn operation_vocabulary_is_detected() {
        assert!(ops("SELECT a FROM t WHERE b = 1 AND c = 2").contains(&SqlOperation::And));
        assert!(ops("SELECT a FROM t WHERE b = 1 OR c = 2").contains(&SqlOperation::Or));
        assert!(ops("SELECT a FROM t WHERE b IN (1, 2)").contains(&SqlOperation::In));
        assert!(ops("SELECT a FROM t WHERE b NOT IN (1, 2)").contains(&SqlOperation::NotIn));
        assert!(ops("SELECT a FROM t WHERE b LIKE 'x%'").contains(&SqlOperation::Like));
        assert!(ops("SELECT a FROM t WHERE b NOT LIKE 'x%'").contains(&SqlOperation::Like));
        assert!(ops("SELECT count(*) FROM t").contains(&SqlOperation::AggCount));
        assert!(ops("SELECT sum(a) FROM t").contains(&SqlOperation::AggSum));
        assert!(ops("SELECT avg(a) FROM t").contains(&SqlOperation::AggAvg));
        assert!(ops("SELECT min(a), max(b) FROM t").contains(&SqlOperation::AggMin));
        assert!(ops("SELECT min(a), max(b) FROM t").contains(&SqlOperation::AggMax));
        assert!(ops("SELECT DISTINCT a FROM t").contains(&SqlOperation::Distinct));
        assert!(ops("SELECT count(DISTINCT a) FROM t").contains(&SqlOperation::Distinct));
        assert!(ops("SELECT * FROM t").contains(&SqlOperation::Star));
        assert!(
            ops("SELECT a FROM t GROUP BY a HAVING count(*) > 1").is_superset(&BTreeSet::from([
                SqlOperation::GroupBy,
                SqlOperation::Having
            ]))
        );
        assert!(
            ops("SELECT a FROM t ORDER BY a LIMIT 3").is_superset(&BTreeSet::from([
                SqlOperation::OrderBy,
                SqlOperation::Limit
            ]))
        );
        assert!(ops("SELECT a FROM t UNION SELECT a FROM u").contains(&SqlOperation::Union));
        assert!(ops("SELECT a FROM t INTERSECT SELECT a FROM u").contains(&SqlOperation::Intersect));
        assert!(ops("SELECT a FROM t EXCEPT SELECT a FROM u").contains(&SqlOperation::Except));
    }

    #[test]
    fn count_star_is_not_a_star_projection() {
        let p = profile("SELECT count(*) FROM farm");
        assert!(p.operations.contains(&SqlOperation::AggCount));
        assert!(!p.operations.contains(&SqlOperation::Star));
    }

    #[test]
    fn between_carries_no_operation_tag() {
        let p = profile("SELECT a FROM t WHERE v BETWEEN 1 AND 5");
        assert_eq!(
            p.operations,
            BTreeSet::from([SqlOperation::Where]),
            "BETWEEN and its AND are structural, not tagged"
        );
        assert!(p.columns.contains("t.v"));
    }

    #[test]
    fn set_operation_branches_contribute_everything() {
        let p = profile("SELECT a FROM t WHERE x = 1 UNION SELECT b FROM u GROUP BY b");
        assert_eq!(names(&p.tables), vec!["t", "u"]);
        assert!(p.operations.is_superset(&BTreeSet::from([
            SqlOperation::Union,
            SqlOperation::Where,
            SqlOperation::GroupBy
        ])));
    }

    #[test]
    fn profile_is_quoting_and_case_invariant() {
        let a = profile("SELECT Official_Name FROM city WHERE Status = 'Village'");
        let b = profile("select \"official_name\" from \"CITY\" where `STATUS` = 'Village'");
        assert_eq!(a, b);
    }

    #[test]
    fn profile_ignores_multiplicity() {
        let a = profile("SELECT a FROM t WHERE x = 1 AND y = 2 AND z = 3");
        let b = profile("SELECT a FROM t WHERE x = 1 AND y = 2");
        assert_eq!(a.operations, b.operations);
    }

    #[test]
    fn compare_reports_diffs_in_both_directions() {
        let gold = profile("SELECT name, rank FROM t WHERE x = 1");
        let gen = profile("SELECT name, id FROM t ORDER BY id");
        let report = compare_profiles(&gold, &gen);
        assert!(report.table_match);
        assert!(!report.column_match);
        assert!(!report.operation_match);
        assert_eq!(report.missing_columns, vec!["t.rank", "t.x"]);
        assert_eq!(report.extra_columns, vec!["t.id"]);
        assert_eq!(report.missing_operations, vec![SqlOperation::Where]);
        assert_eq!(report.extra_operations, vec![SqlOperation::OrderBy]);
        assert!(!report.parse_error);
    }

    #[test]
    fn equal_profiles_match_everywhere() {
        let gold = profile("SELECT a FROM t JOIN u ON t.k = u.k");
        let gen = profile("select A from T join U on T.K = U.K");
        let report = compare_profiles(&gold, &gen);
        assert!(report.all_match());
        assert!(report.missing_tables.is_empty() && report.extra_tables.is_empty());
    }

    #[test]
    fn parse_failure_report_is_all_false() {
        let report = ComponentMatchReport::parse_failure();
        assert!(!report.table_match && !report.column_match && !report.operation_match);
        assert!(report.parse_error);
    }

    #[test]
    fn has_order_by_looks_at_the_top_level_only() {
        assert!(has_order_by(
            &parse_sql("SELECT a FROM t ORDER BY a").unwrap()
        ));
        assert!(!has_order_by(&parse_sql("SELECT a FROM t").unwrap()));
        assert!(!has_order_by(
            &parse_sql("SELECT a FROM t WHERE x IN (SELECT y FROM u ORDER BY y LIMIT 1)").unwrap()
        ));
        assert!(has_order_by(
            &parse_sql("SELECT a FROM t UNION SELECT b FROM u ORDER BY 1").unwrap()
        ));
    }

    #[test]
    fn canonicalize_collapses_whitespace_and_unquotes() {
        assert_eq!(
            canonicalize_sql("SELECT  \"name\"\nFROM   `farm` ;"),
            "SELECT name FROM farm"
        );
    }

    #[test]
    fn canonicalize_keeps_necessary_quotes_and_strings() {
        assert_eq!(
            canonicalize_sql("SELECT \"two words\", \"order\" FROM t WHERE x = 'a  b''c'"),
            "SELECT \"two words\", \"order\" FROM t WHERE x = 'a  b''c'"
        );
    }

    #[test]
    fn canonicalize_tightens_function_calls_but_not_keywords() {
        assert_eq!(
            canonicalize_sql("SELECT count ( * ) FROM t WHERE (a = 1)"),
            "SELECT count(*) FROM t WHERE (a = 1)"
        );
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let samples = [
            "SELECT  a , b FROM t  WHERE x = 'keep  this';",
            "SELECT count ( * ) FROM `farm`",
            "SELECT \"two words\" FROM t",
            "select t1.a from t as t1 join u on t1.k=u.k",
        ];
        for sql in samples {
            let once = canonicalize_sql(sql);
            assert_eq!(canonicalize_sql(&once), once, "not idempotent for {sql}");
        }
    }

    #[test]
    fn canonicalize_survives_unlexable_input() {
        assert_eq!(canonicalize_sql("SELECT 'broken"), "SELECT 'broken");
    }
}
