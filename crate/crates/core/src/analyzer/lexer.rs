//! SQL tokenizer shared by the parser and the text canonicalizer.

use super::parser::SqlParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum SqlTok {
    /// Bare, double-quoted, or backquoted identifier. `quoted` records
    /// whether quoting was used in the source.
    Ident {
        text: String,
        quoted: bool,
    },
    Number(String),
    /// Single-quoted string literal with `''` escapes already collapsed.
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Eq,
    NotEq,
    Lt,
    Gt,
    LtEq,
    GtEq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: SqlTok,
    /// Byte offset of the token start in the source text.
    pub pos: usize,
}

impl Token {
    /// Case-insensitive keyword check on an unquoted identifier.
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.tok, SqlTok::Ident { text, quoted: false } if text.eq_ignore_ascii_case(kw))
    }

    pub fn describe(&self) -> String {
        match &self.tok {
            SqlTok::Ident { text, .. } => format!("`{text}`"),
            SqlTok::Number(n) => format!("number `{n}`"),
            SqlTok::Str(_) => "string literal".to_string(),
            SqlTok::LParen => "`(`".to_string(),
            SqlTok::RParen => "`)`".to_string(),
            SqlTok::Comma => "`,`".to_string(),
            SqlTok::Dot => "`.`".to_string(),
            SqlTok::Semicolon => "`;`".to_string(),
            SqlTok::Star => "`*`".to_string(),
            SqlTok::Plus => "`+`".to_string(),
            SqlTok::Minus => "`-`".to_string(),
            SqlTok::Slash => "`/`".to_string(),
            SqlTok::Percent => "`%`".to_string(),
            SqlTok::Eq => "`=`".to_string(),
            SqlTok::NotEq => "`!=`".to_string(),
            SqlTok::Lt => "`<`".to_string(),
            SqlTok::Gt => "`>`".to_string(),
            SqlTok::LtEq => "`<=`".to_string(),
            SqlTok::GtEq => "`>=`".to_string(),
        }
    }
}

pub fn tokenize(sql: &str) -> Result<Vec<Token>, SqlParseError> {
    let chars: Vec<(usize, char)> = sql.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '-' if chars.get(i + 1).map(|&(_, c)| c) == Some('-') => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1).map(|&(_, c)| c) == Some('*') => {
                i += 2;
                loop {
                    if i >= chars.len() {
                        break;
                    }
                    if chars[i].1 == '*' && chars.get(i + 1).map(|&(_, c)| c) == Some('/') {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
            }
            '\'' => {
                i += 1;
                let mut text = String::new();
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(SqlParseError::Syntax {
                                position: pos,
                                expected: "closing `'`".to_string(),
                                found: "end of input".to_string(),
                            })
                        }
                        Some(&(_, '\'')) => {
                            if chars.get(i + 1).map(|&(_, c)| c) == Some('\'') {
                                text.push('\'');
                                i += 2;
                            } else {
                                i += 1;
                                break;
                            }
                        }
                        Some(&(_, ch)) => {
                            text.push(ch);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token {
                    tok: SqlTok::Str(text),
                    pos,
                });
            }
            '"' | '`' => {
                let quote = c;
                i += 1;
                let mut text = String::new();
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(SqlParseError::Syntax {
                                position: pos,
                                expected: format!("closing `{quote}`"),
                                found: "end of input".to_string(),
                            })
                        }
                        Some(&(_, ch)) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some(&(_, ch)) => {
                            text.push(ch);
                            i += 1;
                        }
                    }
                }
                if text.is_empty() {
                    return Err(SqlParseError::Syntax {
                        position: pos,
                        expected: "identifier".to_string(),
                        found: "empty quoted identifier".to_string(),
                    });
                }
                tokens.push(Token {
                    tok: SqlTok::Ident { text, quoted: true },
                    pos,
                });
            }
            c if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit())) =>
            {
                let mut text = String::new();
                let mut seen_dot = false;
                while let Some(&(_, ch)) = chars.get(i) {
                    if ch.is_ascii_digit() {
                        text.push(ch);
                        i += 1;
                    } else if ch == '.' && !seen_dot {
                        // A dot not followed by a digit belongs to the next
                        // token (e.g. `1.` never appears in this subset).
                        if chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit()) {
                            seen_dot = true;
                            text.push(ch);
                            i += 1;
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    tok: SqlTok::Number(text),
                    pos,
                });
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut text = String::new();
                while let Some(&(_, ch)) = chars.get(i) {
                    if ch.is_alphanumeric() || ch == '_' {
                        text.push(ch);
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    tok: SqlTok::Ident {
                        text,
                        quoted: false,
                    },
                    pos,
                });
            }
            _ => {
                let (tok, width) = match c {
                    '(' => (SqlTok::LParen, 1),
                    ')' => (SqlTok::RParen, 1),
                    ',' => (SqlTok::Comma, 1),
                    '.' => (SqlTok::Dot, 1),
                    ';' => (SqlTok::Semicolon, 1),
                    '*' => (SqlTok::Star, 1),
                    '+' => (SqlTok::Plus, 1),
                    '-' => (SqlTok::Minus, 1),
                    '/' => (SqlTok::Slash, 1),
                    '%' => (SqlTok::Percent, 1),
                    '=' => (SqlTok::Eq, 1),
                    '!' if chars.get(i + 1).map(|&(_, c)| c) == Some('=') => (SqlTok::NotEq, 2),
                    '<' => match chars.get(i + 1).map(|&(_, c)| c) {
                        Some('=') => (SqlTok::LtEq, 2),
                        Some('>') => (SqlTok::NotEq, 2),
                        _ => (SqlTok::Lt, 1),
                    },
                    '>' if chars.get(i + 1).map(|&(_, c)| c) == Some('=') => (SqlTok::GtEq, 2),
                    '>' => (SqlTok::Gt, 1),
                    other => {
                        return Err(SqlParseError::Syntax {
                            position: pos,
                            expected: "a SQL token".to_string(),
                            found: format!("`{other}`"),
                        })
                    }
                };
                tokens.push(Token { tok, pos });
                i += width;
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<SqlTok> {
        tokenize(sql).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn tokenizes_a_simple_query() {
        let toks = kinds("SELECT a, b FROM t WHERE x >= 10;");
        assert_eq!(toks.len(), 11);
        assert_eq!(
            toks[0],
            SqlTok::Ident {
                text: "SELECT".to_string(),
                quoted: false
            }
        );
        assert!(toks.contains(&SqlTok::GtEq));
        assert_eq!(toks.last(), Some(&SqlTok::Semicolon));
    }

    #[test]
    fn handles_quoting_styles_and_escapes() {
        let toks = kinds(r#"SELECT "Farm ID", `Year` FROM t WHERE name = 'O''Hara'"#);
        assert!(toks.contains(&SqlTok::Ident {
            text: "Farm ID".to_string(),
            quoted: true
        }));
        assert!(toks.contains(&SqlTok::Ident {
            text: "Year".to_string(),
            quoted: true
        }));
        assert!(toks.contains(&SqlTok::Str("O'Hara".to_string())));
    }

    #[test]
    fn distinguishes_comparison_operators() {
        let toks = kinds("a != b <> c <= d >= e < f > g = h");
        let ops: Vec<&SqlTok> = toks
            .iter()
            .filter(|t| !matches!(t, SqlTok::Ident { .. }))
            .collect();
        assert_eq!(
            ops,
            vec![
                &SqlTok::NotEq,
                &SqlTok::NotEq,
                &SqlTok::LtEq,
                &SqlTok::GtEq,
                &SqlTok::Lt,
                &SqlTok::Gt,
                &SqlTok::Eq
            ]
        );
    }

    #[test]
    fn numbers_with_decimals_lex_as_one_token() {
        let toks = kinds("WHERE price > 12.50");
        assert!(toks.contains(&SqlTok::Number("12.50".to_string())));
        let toks = kinds("T1.a");
        assert_eq!(
            toks.len(),
            3,
            "qualified column must keep its dot: {toks:?}"
        );
    }

    #[test]
    fn strips_comments() {
        let toks = kinds("SELECT a -- trailing\nFROM t /* block */ WHERE b = 1");
        assert_eq!(toks.len(), 8);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("SELECT 'oops").is_err());
        assert!(tokenize("SELECT \"oops").is_err());
    }

    #[test]
    fn records_byte_positions() {
        let tokens = tokenize("SELECT a").unwrap();
        assert_eq!(tokens[0].pos, 0);
        assert_eq!(tokens[1].pos, 7);
    }
}
