//! Parsing and canonical rendering of `CREATE TABLE` statements.
//!
//! The accepted dialect is the narrow one found in text-to-SQL benchmark
//! dumps: column definitions with simple types, an optional table-level or
//! inline `PRIMARY KEY`, and table-level `FOREIGN KEY ... REFERENCES`
//! clauses. Identifiers may be bare, double-quoted, or backquoted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdlError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
}

/// Column types the corpus tooling understands. Anything else is preserved
/// verbatim in [`SqlType::Other`] so the statement still round-trips, but no
/// synthetic values can be generated for it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqlType {
    Int,
    Real,
    Text,
    Varchar(u32),
    Date,
    Bool,
    Other(String),
}

impl SqlType {
    /// Interprets a raw type spelling. Recognized spellings are matched
    /// case-insensitively; everything else becomes [`SqlType::Other`] with
    /// the original spelling kept.
    pub fn parse(raw: &str) -> SqlType {
        let trimmed = raw.trim();
        let folded = trimmed.to_ascii_lowercase();
        match folded.as_str() {
            "int" => return SqlType::Int,
            "real" => return SqlType::Real,
            "text" => return SqlType::Text,
            "date" => return SqlType::Date,
            "bool" => return SqlType::Bool,
            _ => {}
        }
        if let Some(rest) = folded.strip_prefix("varchar") {
            let rest = rest.trim();
            if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
                if let Ok(n) = inner.trim().parse::<u32>() {
                    return SqlType::Varchar(n);
                }
            }
        }
        SqlType::Other(trimmed.to_string())
    }

    /// Canonical lowercase spelling used by [`normalize_ddl`].
    pub fn canonical(&self) -> String {
        match self {
            SqlType::Int => "int".to_string(),
            SqlType::Real => "real".to_string(),
            SqlType::Text => "text".to_string(),
            SqlType::Varchar(n) => format!("varchar({n})"),
            SqlType::Date => "date".to_string(),
            SqlType::Bool => "bool".to_string(),
            SqlType::Other(raw) => raw.clone(),
        }
    }
}

impl std::fmt::Display for SqlType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub sql_type: SqlType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKeyRef {
    pub column: String,
    pub ref_table: String,
    pub ref_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKeyRef>,
    /// Verbatim statement text as it appeared in the input, including the
    /// trailing semicolon when present.
    pub source_ddl: String,
}

impl TableSchema {
    /// Structural equality: everything except the verbatim source text.
    /// Re-parsing a normalized rendering yields a schema that is
    /// structurally equal to the original even though the source differs.
    pub fn same_structure(&self, other: &TableSchema) -> bool {
        self.name == other.name
            && self.columns == other.columns
            && self.primary_key == other.primary_key
            && self.foreign_keys == other.foreign_keys
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum DdlTok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: DdlTok,
    start: usize,
    end: usize,
    line: usize,
}

struct DdlLexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
}

impl<'a> DdlLexer<'a> {
    fn new(src: &'a str) -> Self {
        DdlLexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            line: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let out = self.chars.get(self.pos).copied();
        if let Some((_, c)) = out {
            if c == '\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        out
    }

    fn byte_at(&self, idx: usize) -> usize {
        self.chars
            .get(idx)
            .map(|&(b, _)| b)
            .unwrap_or(self.src.len())
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.chars.get(self.pos + 1).map(|&(_, c)| c) == Some('-') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.chars.get(self.pos + 1).map(|&(_, c)| c) == Some('*') => {
                    self.bump();
                    self.bump();
                    loop {
                        match self.peek() {
                            None => break,
                            Some('*')
                                if self.chars.get(self.pos + 1).map(|&(_, c)| c) == Some('/') =>
                            {
                                self.bump();
                                self.bump();
                                break;
                            }
                            _ => {
                                self.bump();
                            }
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Spanned>, DdlError> {
        self.skip_trivia();
        let line = self.line;
        let start_idx = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let start = self.byte_at(start_idx);
        let tok = match c {
            '(' => {
                self.bump();
                DdlTok::LParen
            }
            ')' => {
                self.bump();
                DdlTok::RParen
            }
            ',' => {
                self.bump();
                DdlTok::Comma
            }
            ';' => {
                self.bump();
                DdlTok::Semicolon
            }
            '"' | '`' => {
                let quote = c;
                self.bump();
                let mut name = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(DdlError::Parse {
                                line,
                                reason: format!("unterminated {quote}-quoted identifier"),
                            })
                        }
                        Some((_, ch)) if ch == quote => break,
                        Some((_, ch)) => name.push(ch),
                    }
                }
                if name.is_empty() {
                    return Err(DdlError::Parse {
                        line,
                        reason: "empty quoted identifier".to_string(),
                    });
                }
                DdlTok::Ident(name)
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                DdlTok::Number(text)
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut text = String::new();
                while let Some(c) = self.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                DdlTok::Ident(text)
            }
            other => {
                return Err(DdlError::Parse {
                    line,
                    reason: format!("unexpected character `{other}`"),
                })
            }
        };
        let end = self.byte_at(self.pos);
        Ok(Some(Spanned {
            tok,
            start,
            end,
            line,
        }))
    }
}

struct DdlParser<'a> {
    src: &'a str,
    tokens: Vec<Spanned>,
    pos: usize,
}

impl<'a> DdlParser<'a> {
    fn new(src: &'a str) -> Result<Self, DdlError> {
        let mut lexer = DdlLexer::new(src);
        let mut tokens = Vec::new();
        while let Some(t) = lexer.next_token()? {
            tokens.push(t);
        }
        Ok(DdlParser {
            src,
            tokens,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn line_here(&self) -> usize {
        self.peek()
            .map(|t| t.line)
            .or_else(|| self.tokens.last().map(|t| t.line))
            .unwrap_or(1)
    }

    fn err(&self, reason: impl Into<String>) -> DdlError {
        DdlError::Parse {
            line: self.line_here(),
            reason: reason.into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Spanned { tok: DdlTok::Ident(s), .. }) if s.eq_ignore_ascii_case(kw))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DdlError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, DdlError> {
        match self.peek() {
            Some(Spanned {
                tok: DdlTok::Ident(s),
                ..
            }) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn expect_tok(&mut self, tok: DdlTok, what: &str) -> Result<(), DdlError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.bump();
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn parse_statements(&mut self) -> Result<Vec<TableSchema>, DdlError> {
        let mut tables = Vec::new();
        while self.peek().is_some() {
            // Tolerate stray semicolons between statements.
            if matches!(self.peek().map(|t| &t.tok), Some(DdlTok::Semicolon)) {
                self.bump();
                continue;
            }
            tables.push(self.parse_create_table()?);
        }
        for (i, a) in tables.iter().enumerate() {
            for b in tables.iter().skip(i + 1) {
                if a.name.eq_ignore_ascii_case(&b.name) {
                    return Err(DdlError::DuplicateTable(b.name.clone()));
                }
            }
        }
        Ok(tables)
    }

    fn parse_create_table(&mut self) -> Result<TableSchema, DdlError> {
        let start = self
            .peek()
            .map(|t| t.start)
            .ok_or_else(|| self.err("expected CREATE TABLE"))?;
        self.expect_keyword("CREATE")?;
        self.expect_keyword("TABLE")?;
        if self.is_keyword("IF") {
            self.bump();
            self.expect_keyword("NOT")?;
            self.expect_keyword("EXISTS")?;
        }
        let name = self.expect_ident("table name")?;
        self.expect_tok(DdlTok::LParen, "`(` after table name")?;

        let mut columns: Vec<ColumnDef> = Vec::new();
        let mut primary_key: Vec<String> = Vec::new();
        let mut foreign_keys: Vec<ForeignKeyRef> = Vec::new();

        loop {
            if self.is_keyword("PRIMARY") {
                let line = self.line_here();
                self.bump();
                self.expect_keyword("KEY")?;
                if !primary_key.is_empty() {
                    return Err(DdlError::Parse {
                        line,
                        reason: format!("table `{name}` declares more than one primary key"),
                    });
                }
                self.expect_tok(DdlTok::LParen, "`(` after PRIMARY KEY")?;
                loop {
                    primary_key.push(self.expect_ident("primary key column")?);
                    match self.peek().map(|t| &t.tok) {
                        Some(DdlTok::Comma) => {
                            self.bump();
                        }
                        Some(DdlTok::RParen) => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.err("expected `,` or `)` in primary key list")),
                    }
                }
            } else if self.is_keyword("FOREIGN") {
                self.bump();
                self.expect_keyword("KEY")?;
                self.expect_tok(DdlTok::LParen, "`(` after FOREIGN KEY")?;
                let column = self.expect_ident("foreign key column")?;
                self.expect_tok(DdlTok::RParen, "`)` after foreign key column")?;
                self.expect_keyword("REFERENCES")?;
                let ref_table = self.expect_ident("referenced table")?;
                self.expect_tok(DdlTok::LParen, "`(` after referenced table")?;
                let ref_column = self.expect_ident("referenced column")?;
                self.expect_tok(DdlTok::RParen, "`)` after referenced column")?;
                foreign_keys.push(ForeignKeyRef {
                    column,
                    ref_table,
                    ref_column,
                });
            } else {
                let col = self.parse_column(&mut primary_key)?;
                columns.push(col);
            }
            match self.peek().map(|t| &t.tok) {
                Some(DdlTok::Comma) => {
                    self.bump();
                }
                Some(DdlTok::RParen) => {
                    self.bump();
                    break;
                }
                _ => return Err(self.err("expected `,` or `)` after table element")),
            }
        }

        let mut end = self
            .tokens
            .get(self.pos.saturating_sub(1))
            .map(|t| t.end)
            .unwrap_or(self.src.len());
        if matches!(self.peek().map(|t| &t.tok), Some(DdlTok::Semicolon)) {
            end = self.peek().map(|t| t.end).unwrap_or(end);
            self.bump();
        }

        let line = self.line_here();
        let mut seen: Vec<&str> = Vec::new();
        for col in &columns {
            if seen
                .iter()
                .any(|existing| existing.eq_ignore_ascii_case(&col.name))
            {
                return Err(DdlError::Parse {
                    line,
                    reason: format!("duplicate column `{}` in table `{name}`", col.name),
                });
            }
            seen.push(&col.name);
        }
        for pk in &primary_key {
            if !columns.iter().any(|c| c.name.eq_ignore_ascii_case(pk)) {
                return Err(DdlError::Parse {
                    line,
                    reason: format!("primary key column `{pk}` not defined in table `{name}`"),
                });
            }
        }
        for fk in &foreign_keys {
            if !columns
                .iter()
                .any(|c| c.name.eq_ignore_ascii_case(&fk.column))
            {
                return Err(DdlError::Parse {
                    line,
                    reason: format!(
                        "foreign key column `{}` not defined in table `{name}`",
                        fk.column
                    ),
                });
            }
        }
        if columns.is_empty() {
            return Err(DdlError::Parse {
                line,
                reason: format!("table `{name}` has no columns"),
            });
        }

        Ok(TableSchema {
            name,
            columns,
            primary_key,
            foreign_keys,
            source_ddl: self.src[start..end].to_string(),
        })
    }

    /// Parses one column definition. The type is taken as the verbatim slice
    /// between the column name and the next clause boundary, so multi-token
    /// spellings like `varchar (15)` survive. An inline `PRIMARY KEY` is
    /// recognized and recorded in `primary_key`.
    fn parse_column(&mut self, primary_key: &mut Vec<String>) -> Result<ColumnDef, DdlError> {
        let name_line = self.line_here();
        let name = self.expect_ident("column name")?;
        let type_start = self.peek().map(|t| t.start);
        let mut type_end = type_start;
        let mut depth = 0usize;
        // Everything after an inline PRIMARY KEY is constraint trailing and
        // must not leak into the type slice.
        let mut past_type = false;
        loop {
            match self.peek().map(|t| &t.tok) {
                None => return Err(self.err("unterminated column definition")),
                Some(DdlTok::Comma) | Some(DdlTok::RParen) if depth == 0 => break,
                Some(DdlTok::Ident(s)) if depth == 0 && s.eq_ignore_ascii_case("PRIMARY") => {
                    self.bump();
                    self.expect_keyword("KEY")?;
                    past_type = true;
                    if !primary_key.iter().any(|p| p.eq_ignore_ascii_case(&name)) {
                        primary_key.push(name.clone());
                    }
                }
                Some(DdlTok::LParen) => {
                    depth += 1;
                    if !past_type {
                        type_end = self.peek().map(|t| t.end);
                    }
                    self.bump();
                }
                Some(DdlTok::RParen) => {
                    depth -= 1;
                    if !past_type {
                        type_end = self.peek().map(|t| t.end);
                    }
                    self.bump();
                }
                Some(_) => {
                    if !past_type {
                        type_end = self.peek().map(|t| t.end);
                    }
                    self.bump();
                }
            }
        }
        let raw = match (type_start, type_end) {
            (Some(s), Some(e)) if e > s => self.src[s..e].trim(),
            _ => {
                // Point at the column itself, not whatever token follows it.
                return Err(DdlError::Parse {
                    line: name_line,
                    reason: format!("column `{name}` is missing a type"),
                });
            }
        };
        Ok(ColumnDef {
            name,
            sql_type: SqlType::parse(raw),
        })
    }
}

/// Parses zero or more `CREATE TABLE` statements.
pub fn parse_ddl(text: &str) -> Result<Vec<TableSchema>, DdlError> {
    DdlParser::new(text)?.parse_statements()
}

/// Renders a schema in the canonical layout: one clause per line, all
/// identifiers double-quoted, type names in their canonical lowercase
/// spelling, `PRIMARY KEY` before `FOREIGN KEY` clauses.
///
/// The output is stable: re-parsing it and normalizing again reproduces the
/// same text byte for byte.
pub fn normalize_ddl(schema: &TableSchema) -> String {
    let mut clauses: Vec<String> = schema
        .columns
        .iter()
        .map(|c| format!("\"{}\" {}", c.name, c.sql_type.canonical()))
        .collect();
    if !schema.primary_key.is_empty() {
        let cols: Vec<String> = schema
            .primary_key
            .iter()
            .map(|c| format!("\"{c}\""))
            .collect();
        clauses.push(format!("PRIMARY KEY ({})", cols.join(",")));
    }
    for fk in &schema.foreign_keys {
        clauses.push(format!(
            "FOREIGN KEY (\"{}\") REFERENCES \"{}\"(\"{}\")",
            fk.column, fk.ref_table, fk.ref_column
        ));
    }
    format!(
        "CREATE TABLE \"{}\" (\n{}\n);",
        schema.name,
        clauses.join(",\n")
    )
}
