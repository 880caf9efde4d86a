//! Recursive-descent parser for the SELECT subset.

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, SqlTok, Token};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SqlParseError {
    #[error("parse error at offset {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported SQL feature: {0}")]
    Unsupported(String),
}

/// Words that never act as implicit aliases or bare column names.
const KEYWORDS: &[&str] = &[
    "SELECT",
    "FROM",
    "WHERE",
    "GROUP",
    "BY",
    "HAVING",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "ALL",
    "DISTINCT",
    "AS",
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "FULL",
    "OUTER",
    "CROSS",
    "ON",
    "AND",
    "OR",
    "NOT",
    "IN",
    "LIKE",
    "BETWEEN",
    "IS",
    "NULL",
    "EXISTS",
    "ASC",
    "DESC",
    "CASE",
    "WHEN",
    "THEN",
    "ELSE",
    "END",
    "CAST",
    "WITH",
];

/// Statement-leading words the analyzer refuses outright. Everything the
/// harness evaluates must be a plain query.
const UNSUPPORTED_LEADING: &[&str] = &[
    "INSERT", "UPDATE", "DELETE", "DROP", "CREATE", "ALTER", "TRUNCATE", "REPLACE", "PRAGMA",
    "ATTACH", "BEGIN", "COMMIT", "VACUUM", "EXPLAIN", "WITH",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| word.eq_ignore_ascii_case(k))
}

/// Whether a bare word would collide with the query grammar, so an
/// identifier spelled this way must keep its quotes.
pub(crate) fn is_reserved_word(word: &str) -> bool {
    is_keyword(word)
        || UNSUPPORTED_LEADING
            .iter()
            .any(|k| word.eq_ignore_ascii_case(k))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.src_len)
    }

    fn found(&self) -> String {
        self.peek()
            .map(|t| t.describe())
            .unwrap_or_else(|| "end of input".to_string())
    }

    fn err(&self, expected: impl Into<String>) -> SqlParseError {
        SqlParseError::Syntax {
            position: self.here(),
            expected: expected.into(),
            found: self.found(),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("`{kw}`")))
        }
    }

    fn at_tok(&self, tok: &SqlTok) -> bool {
        self.peek().is_some_and(|t| &t.tok == tok)
    }

    fn eat_tok(&mut self, tok: &SqlTok) -> bool {
        if self.at_tok(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_tok(&mut self, tok: SqlTok, what: &str) -> Result<(), SqlParseError> {
        if self.eat_tok(&tok) {
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SqlParseError> {
        match self.peek() {
            Some(Token {
                tok: SqlTok::Ident { text, .. },
                ..
            }) => {
                let text = text.clone();
                self.bump();
                Ok(text)
            }
            _ => Err(self.err(what)),
        }
    }

    /// Starts a parenthesized subquery? True for `(` followed by SELECT,
    /// possibly through further parens.
    fn paren_opens_query(&self) -> bool {
        if !self.at_tok(&SqlTok::LParen) {
            return false;
        }
        let mut offset = 1;
        while let Some(t) = self.peek_at(offset) {
            match &t.tok {
                SqlTok::LParen => offset += 1,
                SqlTok::Ident {
                    text,
                    quoted: false,
                } if text.eq_ignore_ascii_case("SELECT") => return true,
                _ => return false,
            }
        }
        false
    }

    // ---- queries ----

    fn parse_query(&mut self) -> Result<Query, SqlParseError> {
        let mut query = self.parse_query_term()?;
        loop {
            let op = if self.at_kw("UNION") {
                self.bump();
                let all = self.eat_kw("ALL");
                SetOp::Union { all }
            } else if self.at_kw("INTERSECT") {
                self.bump();
                SetOp::Intersect
            } else if self.at_kw("EXCEPT") {
                self.bump();
                SetOp::Except
            } else {
                break;
            };
            let right = self.parse_query_term()?;
            query = Query::Compound {
                op,
                left: Box::new(query),
                right: Box::new(right),
                order_by: Vec::new(),
                limit: None,
            };
        }
        // ORDER BY and LIMIT always belong to the whole query expression,
        // never to the right branch of a set operation.
        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            order_by = self.parse_order_keys()?;
        }
        let limit = if self.at_kw("LIMIT") {
            Some(self.parse_limit()?)
        } else {
            None
        };
        if !order_by.is_empty() || limit.is_some() {
            match &mut query {
                Query::Select(s) => {
                    s.order_by = order_by;
                    s.limit = limit;
                }
                Query::Compound {
                    order_by: ob,
                    limit: l,
                    ..
                } => {
                    *ob = order_by;
                    *l = limit;
                }
            }
        }
        Ok(query)
    }

    fn parse_query_term(&mut self) -> Result<Query, SqlParseError> {
        if self.at_tok(&SqlTok::LParen) {
            self.bump();
            let inner = self.parse_query()?;
            self.expect_tok(SqlTok::RParen, "`)` closing subquery")?;
            return Ok(inner);
        }
        Ok(Query::Select(Box::new(self.parse_select()?)))
    }

    fn parse_select(&mut self) -> Result<Select, SqlParseError> {
        if let Some(t) = self.peek() {
            for feature in UNSUPPORTED_LEADING {
                if t.is_kw(feature) {
                    return Err(SqlParseError::Unsupported((*feature).to_string()));
                }
            }
        }
        self.expect_kw("SELECT")?;
        let distinct = if self.eat_kw("DISTINCT") {
            true
        } else {
            self.eat_kw("ALL");
            false
        };
        let mut items = vec![self.parse_select_item()?];
        while self.eat_tok(&SqlTok::Comma) {
            items.push(self.parse_select_item()?);
        }
        let from = if self.eat_kw("FROM") {
            Some(self.parse_from()?)
        } else {
            None
        };
        let where_clause = if self.eat_kw("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.parse_expr()?);
            while self.eat_tok(&SqlTok::Comma) {
                group_by.push(self.parse_expr()?);
            }
        }
        let having = if self.eat_kw("HAVING") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            items,
            from,
            where_clause,
            group_by,
            having,
            order_by: Vec::new(),
            limit: None,
        })
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SqlParseError> {
        if self.eat_tok(&SqlTok::Star) {
            return Ok(SelectItem::Star);
        }
        // `t.*`
        if let (
            Some(Token {
                tok: SqlTok::Ident { text, .. },
                ..
            }),
            Some(Token {
                tok: SqlTok::Dot, ..
            }),
            Some(Token {
                tok: SqlTok::Star, ..
            }),
        ) = (self.peek(), self.peek_at(1), self.peek_at(2))
        {
            let qualifier = text.clone();
            self.bump();
            self.bump();
            self.bump();
            return Ok(SelectItem::QualifiedStar(qualifier));
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    /// `AS name`, or a bare non-keyword identifier.
    fn parse_alias(&mut self) -> Result<Option<String>, SqlParseError> {
        if self.eat_kw("AS") {
            return Ok(Some(self.ident("alias after AS")?));
        }
        if let Some(Token {
            tok: SqlTok::Ident { text, quoted },
            ..
        }) = self.peek()
        {
            if *quoted || !is_keyword(text) {
                let alias = text.clone();
                self.bump();
                return Ok(Some(alias));
            }
        }
        Ok(None)
    }

    fn parse_from(&mut self) -> Result<FromClause, SqlParseError> {
        let first = self.parse_table_ref()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_tok(&SqlTok::Comma) {
                JoinKind::Comma
            } else if self.at_kw("JOIN") {
                self.bump();
                JoinKind::Inner
            } else if self.at_kw("INNER") {
                self.bump();
                self.expect_kw("JOIN")?;
                JoinKind::Inner
            } else if self.at_kw("LEFT") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Left
            } else if self.at_kw("RIGHT") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Right
            } else if self.at_kw("FULL") {
                self.bump();
                self.eat_kw("OUTER");
                self.expect_kw("JOIN")?;
                JoinKind::Full
            } else if self.at_kw("CROSS") {
                self.bump();
                self.expect_kw("JOIN")?;
                JoinKind::Cross
            } else {
                break;
            };
            let table = self.parse_table_ref()?;
            let on = if self.eat_kw("ON") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            joins.push(Join { kind, table, on });
        }
        Ok(FromClause { first, joins })
    }

    fn parse_table_ref(&mut self) -> Result<TableRef, SqlParseError> {
        if self.paren_opens_query() {
            self.bump();
            let query = self.parse_query()?;
            self.expect_tok(SqlTok::RParen, "`)` closing derived table")?;
            let alias = self.parse_alias()?;
            return Ok(TableRef::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.ident("table name")?;
        let alias = self.parse_alias()?;
        Ok(TableRef::Table { name, alias })
    }

    fn parse_order_keys(&mut self) -> Result<Vec<OrderKey>, SqlParseError> {
        let mut keys = Vec::new();
        loop {
            let expr = self.parse_expr()?;
            let descending = if self.eat_kw("DESC") {
                true
            } else {
                self.eat_kw("ASC");
                false
            };
            keys.push(OrderKey { expr, descending });
            if !self.eat_tok(&SqlTok::Comma) {
                break;
            }
        }
        Ok(keys)
    }

    fn parse_limit(&mut self) -> Result<Limit, SqlParseError> {
        self.expect_kw("LIMIT")?;
        let count = self.parse_u64("limit count")?;
        let offset = if self.eat_kw("OFFSET") {
            Some(self.parse_u64("offset count")?)
        } else {
            None
        };
        Ok(Limit { count, offset })
    }

    fn parse_u64(&mut self, what: &str) -> Result<u64, SqlParseError> {
        match self.peek() {
            Some(Token {
                tok: SqlTok::Number(n),
                ..
            }) => {
                let parsed = n
                    .parse::<u64>()
                    .map_err(|_| self.err(format!("integer {what}")))?;
                self.bump();
                Ok(parsed)
            }
            _ => Err(self.err(format!("integer {what}"))),
        }
    }

    // ---- expressions ----

    fn parse_expr(&mut self) -> Result<Expr, SqlParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_and()?;
        while self.eat_kw("OR") {
            let right = self.parse_and()?;
            left = Expr::Binary {
                op: BinaryOp::Or,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_not()?;
        while self.eat_kw("AND") {
            let right = self.parse_not()?;
            left = Expr::Binary {
                op: BinaryOp::And,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, SqlParseError> {
        if self.at_kw("NOT")
            && !matches!(self.peek_at(1), Some(t) if t.is_kw("IN") || t.is_kw("LIKE") || t.is_kw("BETWEEN"))
        {
            self.bump();
            let operand = self.parse_not()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.parse_predicate()
    }

    fn parse_predicate(&mut self) -> Result<Expr, SqlParseError> {
        if self.at_kw("EXISTS") {
            self.bump();
            self.expect_tok(SqlTok::LParen, "`(` after EXISTS")?;
            let query = self.parse_query()?;
            self.expect_tok(SqlTok::RParen, "`)` closing EXISTS subquery")?;
            return Ok(Expr::Exists {
                query: Box::new(query),
            });
        }
        let mut expr = self.parse_additive()?;
        loop {
            let negated = if self.at_kw("NOT")
                && matches!(self.peek_at(1), Some(t) if t.is_kw("IN") || t.is_kw("LIKE") || t.is_kw("BETWEEN"))
            {
                self.bump();
                true
            } else {
                false
            };
            if self.eat_kw("IN") {
                self.expect_tok(SqlTok::LParen, "`(` after IN")?;
                if self.at_kw("SELECT") || self.paren_opens_query() {
                    let query = self.parse_query()?;
                    self.expect_tok(SqlTok::RParen, "`)` closing IN subquery")?;
                    expr = Expr::InSubquery {
                        negated,
                        expr: Box::new(expr),
                        query: Box::new(query),
                    };
                } else {
                    let mut list = vec![self.parse_expr()?];
                    while self.eat_tok(&SqlTok::Comma) {
                        list.push(self.parse_expr()?);
                    }
                    self.expect_tok(SqlTok::RParen, "`)` closing IN list")?;
                    expr = Expr::InList {
                        negated,
                        expr: Box::new(expr),
                        list,
                    };
                }
                continue;
            }
            if self.eat_kw("LIKE") {
                let pattern = self.parse_additive()?;
                expr = Expr::Like {
                    negated,
                    expr: Box::new(expr),
                    pattern: Box::new(pattern),
                };
                continue;
            }
            if self.eat_kw("BETWEEN") {
                let low = self.parse_additive()?;
                self.expect_kw("AND")?;
                let high = self.parse_additive()?;
                expr = Expr::Between {
                    negated,
                    expr: Box::new(expr),
                    low: Box::new(low),
                    high: Box::new(high),
                };
                continue;
            }
            if negated {
                return Err(self.err("`IN`, `LIKE`, or `BETWEEN` after `NOT`"));
            }
            if self.eat_kw("IS") {
                let negated = self.eat_kw("NOT");
                self.expect_kw("NULL")?;
                expr = Expr::IsNull {
                    negated,
                    expr: Box::new(expr),
                };
                continue;
            }
            let op = match self.peek().map(|t| &t.tok) {
                Some(SqlTok::Eq) => BinaryOp::Eq,
                Some(SqlTok::NotEq) => BinaryOp::NotEq,
                Some(SqlTok::Lt) => BinaryOp::Lt,
                Some(SqlTok::Gt) => BinaryOp::Gt,
                Some(SqlTok::LtEq) => BinaryOp::LtEq,
                Some(SqlTok::GtEq) => BinaryOp::GtEq,
                _ => break,
            };
            self.bump();
            let right = self.parse_additive()?;
            expr = Expr::Binary {
                op,
                left: Box::new(expr),
                right: Box::new(right),
            };
        }
        Ok(expr)
    }

    fn parse_additive(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(SqlTok::Plus) => BinaryOp::Add,
                Some(SqlTok::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let right = self.parse_multiplicative()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_unary()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(SqlTok::Star) => BinaryOp::Mul,
                Some(SqlTok::Slash) => BinaryOp::Div,
                Some(SqlTok::Percent) => BinaryOp::Mod,
                _ => break,
            };
            self.bump();
            let right = self.parse_unary()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, SqlParseError> {
        if self.eat_tok(&SqlTok::Minus) {
            let operand = self.parse_unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            });
        }
        if self.eat_tok(&SqlTok::Plus) {
            return self.parse_unary();
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, SqlParseError> {
        for feature in ["CASE", "CAST"] {
            if self.at_kw(feature) {
                return Err(SqlParseError::Unsupported(feature.to_string()));
            }
        }
        match self.peek().cloned() {
            Some(Token {
                tok: SqlTok::Number(n),
                ..
            }) => {
                self.bump();
                Ok(Expr::Literal(Literal::Number(n)))
            }
            Some(Token {
                tok: SqlTok::Str(s),
                ..
            }) => {
                self.bump();
                Ok(Expr::Literal(Literal::Str(s)))
            }
            Some(t) if t.is_kw("NULL") => {
                self.bump();
                Ok(Expr::Literal(Literal::Null))
            }
            Some(t) if t.is_kw("TRUE") => {
                self.bump();
                Ok(Expr::Literal(Literal::Bool(true)))
            }
            Some(t) if t.is_kw("FALSE") => {
                self.bump();
                Ok(Expr::Literal(Literal::Bool(false)))
            }
            Some(Token {
                tok: SqlTok::LParen,
                ..
            }) => {
                if self.paren_opens_query() {
                    self.bump();
                    let query = self.parse_query()?;
                    self.expect_tok(SqlTok::RParen, "`)` closing subquery")?;
                    return Ok(Expr::Subquery(Box::new(query)));
                }
                self.bump();
                let inner = self.parse_expr()?;
                self.expect_tok(SqlTok::RParen, "`)` closing parenthesized expression")?;
                Ok(inner)
            }
            Some(Token {
                tok: SqlTok::Ident { text, quoted },
                ..
            }) => {
                // Function call?
                if !quoted && matches!(self.peek_at(1), Some(t) if t.tok == SqlTok::LParen) {
                    self.bump();
                    self.bump();
                    return self.parse_func_tail(text);
                }
                if !quoted && is_keyword(&text) {
                    return Err(self.err("an expression"));
                }
                self.bump();
                if self.at_tok(&SqlTok::Dot) {
                    self.bump();
                    let name = self.ident("column name after `.`")?;
                    return Ok(Expr::Column {
                        qualifier: Some(text),
                        name,
                    });
                }
                Ok(Expr::Column {
                    qualifier: None,
                    name: text,
                })
            }
            _ => Err(self.err("an expression")),
        }
    }

    /// Parses the argument list of `name(`. The opening paren has been
    /// consumed already.
    fn parse_func_tail(&mut self, name: String) -> Result<Expr, SqlParseError> {
        let distinct = self.eat_kw("DISTINCT");
        let mut star = false;
        let mut args = Vec::new();
        if self.eat_tok(&SqlTok::Star) {
            star = true;
        } else if !self.at_tok(&SqlTok::RParen) {
            args.push(self.parse_expr()?);
            while self.eat_tok(&SqlTok::Comma) {
                args.push(self.parse_expr()?);
            }
        }
        self.expect_tok(SqlTok::RParen, "`)` closing function call")?;
        if self.at_kw("OVER") {
            return Err(SqlParseError::Unsupported("OVER".to_string()));
        }
        Ok(Expr::Func {
            name,
            distinct,
            star,
            args,
        })
    }
}

/// Parses one SELECT statement (optionally semicolon-terminated).
pub fn parse_sql(sql: &str) -> Result<Query, SqlParseError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        src_len: sql.len(),
    };
    if parser.peek().is_none() {
        return Err(SqlParseError::Syntax {
            position: 0,
            expected: "`SELECT`".to_string(),
            found: "end of input".to_string(),
        });
    }
    let query = parser.parse_query()?;
    while parser.at_tok(&SqlTok::Semicolon) {
        parser.bump();
    }
    if parser.peek().is_some() {
        return Err(parser.err("end of statement"));
    }
    Ok(query)
}
