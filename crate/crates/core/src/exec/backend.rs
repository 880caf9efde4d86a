//! Fixture databases and guarded read-only execution.
//!
//! The embedded backend owns a database file: fixtures are loaded through a
//! short-lived writable connection, evaluation queries each run on a fresh
//! read-only connection with a deadline. A lexical guard rejects anything
//! that is not a single plain query before it ever reaches an engine, and
//! the read-only session is the backstop should the guard be evaded.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::result::{ResultTable, Value};
use crate::analyzer::{tokenize, SqlTok};
use crate::util::sha256_hex;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("statement rejected by the read-only guard: leads with `{keyword}`")]
    DmlRejected { keyword: String },
    #[error("only a single statement may be executed at a time")]
    MultiStatement,
    #[error("query exceeded the {ms} ms statement deadline")]
    Timeout { ms: u64 },
    #[error("engine error: {message}")]
    Engine { message: String },
    #[error("backend fault: {message}")]
    Backend { message: String },
    #[error("fixture statement {index} failed: {message}")]
    Fixture { index: usize, message: String },
}

impl ExecError {
    /// Infrastructure faults abort a run; everything else is a property of
    /// the statement under evaluation and is folded into the comparison.
    pub fn is_backend_fault(&self) -> bool {
        matches!(self, ExecError::Backend { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Embedded,
    Server,
}

/// Backend selection as it appears in the run configuration. `connection`
/// is a database file path for the embedded engine and a connection URL for
/// a server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbBackendSpec {
    pub kind: BackendKind,
    pub connection: String,
    pub statement_timeout_ms: u64,
}

impl Default for DbBackendSpec {
    fn default() -> DbBackendSpec {
        DbBackendSpec {
            kind: BackendKind::Embedded,
            connection: String::new(),
            statement_timeout_ms: 5_000,
        }
    }
}

pub trait ExecBackend: Send + Sync {
    /// Runs one guarded, read-only statement to completion.
    fn execute_readonly(&self, sql: &str) -> Result<ResultTable, ExecError>;

    /// Digest of all user-table contents; unchanged by evaluation runs.
    fn content_hash(&self) -> Result<String, ExecError>;
}

/// Statement keywords that never execute. `CREATE` and friends guard the
/// fixture; the session-control words close off escape hatches.
const REJECTED_LEADING: &[&str] = &[
    "INSERT", "UPDATE", "DELETE", "DROP", "ALTER", "CREATE", "TRUNCATE", "REPLACE", "MERGE",
    "GRANT", "REVOKE", "PRAGMA", "ATTACH", "DETACH", "VACUUM", "REINDEX", "ANALYZE", "BEGIN",
    "COMMIT", "ROLLBACK", "SET", "CALL", "COPY",
];

/// Rejects write statements and multi-statement payloads before execution.
/// Purely lexical, so it works on SQL our analyzer cannot parse.
pub(crate) fn guard_statement(sql: &str) -> Result<(), ExecError> {
    let tokens = match tokenize(sql) {
        Ok(tokens) => tokens,
        Err(_) => {
            // Unlexable input still gets keyword-guarded; the engine will
            // produce the real syntax error.
            let first = sql.split_whitespace().next().unwrap_or("");
            if REJECTED_LEADING
                .iter()
                .any(|k| first.eq_ignore_ascii_case(k))
            {
                return Err(ExecError::DmlRejected {
                    keyword: first.to_uppercase(),
                });
            }
            return Ok(());
        }
    };
    if let Some(first) = tokens.first() {
        if let SqlTok::Ident {
            text,
            quoted: false,
        } = &first.tok
        {
            if REJECTED_LEADING
                .iter()
                .any(|k| text.eq_ignore_ascii_case(k))
            {
                return Err(ExecError::DmlRejected {
                    keyword: text.to_uppercase(),
                });
            }
        }
    }
    // A semicolon anywhere before the last token means a second statement.
    let mut tail = tokens.as_slice();
    while let [rest @ .., last] = tail {
        if matches!(last.tok, SqlTok::Semicolon) {
            tail = rest;
        } else {
            break;
        }
    }
    if tail.iter().any(|t| matches!(t.tok, SqlTok::Semicolon)) {
        return Err(ExecError::MultiStatement);
    }
    Ok(())
}

/// File-backed embedded database. Every evaluation query opens a fresh
/// read-only connection, so parallel workers never share engine state.
pub struct EmbeddedBackend {
    path: PathBuf,
    statement_timeout_ms: u64,
}

impl EmbeddedBackend {
    /// Creates (or truncates) the database file at `path`.
    pub fn create(path: &Path, statement_timeout_ms: u64) -> Result<EmbeddedBackend, ExecError> {
        if path.exists() {
            std::fs::remove_file(path).map_err(|e| ExecError::Backend {
                message: format!("cannot reset {}: {e}", path.display()),
            })?;
        }
        rusqlite::Connection::open(path).map_err(backend_fault)?;
        Ok(EmbeddedBackend {
            path: path.to_path_buf(),
            statement_timeout_ms,
        })
    }

    /// Opens an existing database file without touching its contents.
    pub fn open(path: &Path, statement_timeout_ms: u64) -> Result<EmbeddedBackend, ExecError> {
        if !path.exists() {
            return Err(ExecError::Backend {
                message: format!("no database at {}", path.display()),
            });
        }
        Ok(EmbeddedBackend {
            path: path.to_path_buf(),
            statement_timeout_ms,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Creates the schema and loads rows through a writable connection.
    /// `inserts` are applied one statement at a time so a failure reports
    /// its index.
    pub fn load_fixture(&self, ddl: &str, inserts: &[String]) -> Result<(), ExecError> {
        let conn = rusqlite::Connection::open(&self.path).map_err(backend_fault)?;
        conn.execute_batch(ddl).map_err(|e| ExecError::Fixture {
            index: 0,
            message: format!("schema: {e}"),
        })?;
        for (index, statement) in inserts.iter().enumerate() {
            conn.execute_batch(statement)
                .map_err(|e| ExecError::Fixture {
                    index,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    fn read_only_conn(&self) -> Result<rusqlite::Connection, ExecError> {
        rusqlite::Connection::open_with_flags(
            &self.path,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY | rusqlite::OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )
        .map_err(backend_fault)
    }

    fn run_query(
        &self,
        conn: &rusqlite::Connection,
        sql: &str,
    ) -> Result<ResultTable, rusqlite::Error> {
        let mut stmt = conn.prepare(sql)?;
        let column_names: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
        let column_count = column_names.len();
        let mut rows = Vec::new();
        let mut raw = stmt.query([])?;
        while let Some(row) = raw.next()? {
            let mut values = Vec::with_capacity(column_count);
            for i in 0..column_count {
                values.push(match row.get_ref(i)? {
                    rusqlite::types::ValueRef::Null => Value::Null,
                    rusqlite::types::ValueRef::Integer(v) => Value::Int(v),
                    rusqlite::types::ValueRef::Real(v) => Value::Real(v),
                    rusqlite::types::ValueRef::Text(v) => {
                        Value::Text(String::from_utf8_lossy(v).into_owned())
                    }
                    rusqlite::types::ValueRef::Blob(v) => {
                        Value::Text(String::from_utf8_lossy(v).into_owned())
                    }
                });
            }
            rows.push(values);
        }
        Ok(ResultTable::new(column_names, rows))
    }
}

fn backend_fault(e: rusqlite::Error) -> ExecError {
    ExecError::Backend {
        message: e.to_string(),
    }
}

impl ExecBackend for EmbeddedBackend {
    fn execute_readonly(&self, sql: &str) -> Result<ResultTable, ExecError> {
        guard_statement(sql)?;
        let conn = self.read_only_conn()?;
        let deadline = Instant::now() + Duration::from_millis(self.statement_timeout_ms);
        conn.progress_handler(1_000, Some(move || Instant::now() > deadline));
        self.run_query(&conn, sql).map_err(|e| match e {
            rusqlite::Error::SqliteFailure(inner, _)
                if inner.code == rusqlite::ErrorCode::OperationInterrupted =>
            {
                ExecError::Timeout {
                    ms: self.statement_timeout_ms,
                }
            }
            other => ExecError::Engine {
                message: other.to_string(),
            },
        })
    }

    fn content_hash(&self) -> Result<String, ExecError> {
        let conn = self.read_only_conn()?;
        let run = || -> Result<String, rusqlite::Error> {
            let mut names_stmt = conn.prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' \
                 AND name NOT LIKE 'sqlite_%' ORDER BY name",
            )?;
            let names: Vec<String> = names_stmt
                .query_map([], |row| row.get::<_, String>(0))?
                .collect::<Result<_, _>>()?;
            let mut dump = String::new();
            for name in names {
                dump.push_str(&format!("table {name}\n"));
                let table = self.run_query(&conn, &format!("SELECT * FROM \"{name}\""))?;
                let mut lines: Vec<String> =
                    table.rows.iter().map(|row| format!("{row:?}")).collect();
                lines.sort();
                for line in lines {
                    dump.push_str(&line);
                    dump.push('\n');
                }
            }
            Ok(dump)
        };
        run()
            .map(|dump| sha256_hex(dump.as_bytes()))
            .map_err(|e| ExecError::Backend {
                message: e.to_string(),
            })
    }
}

/// Thin adapter for a PostgreSQL server, for runs that want the same engine
/// the original experiments used. Sessions are forced read-only and given a
/// statement timeout; results arrive in text form and are re-typed by shape.
pub struct ServerBackend {
    url: String,
    statement_timeout_ms: u64,
}

impl ServerBackend {
    pub fn new(url: &str, statement_timeout_ms: u64) -> ServerBackend {
        ServerBackend {
            url: url.to_string(),
            statement_timeout_ms,
        }
    }

    fn connect(&self) -> Result<postgres::Client, ExecError> {
        postgres::Client::connect(&self.url, postgres::NoTls).map_err(|e| ExecError::Backend {
            message: e.to_string(),
        })
    }

    fn retype(text: Option<&str>) -> Value {
        let Some(text) = text else {
            return Value::Null;
        };
        match text {
            "t" => return Value::Bool(true),
            "f" => return Value::Bool(false),
            _ => {}
        }
        if let Ok(v) = text.parse::<i64>() {
            return Value::Int(v);
        }
        if let Ok(v) = text.parse::<f64>() {
            return Value::Real(v);
        }
        Value::Text(text.to_string())
    }
}

impl ExecBackend for ServerBackend {
    fn execute_readonly(&self, sql: &str) -> Result<ResultTable, ExecError> {
        guard_statement(sql)?;
        let mut client = self.connect()?;
        client
            .batch_execute(&format!(
                "SET default_transaction_read_only = on; \
                 SET statement_timeout = {}",
                self.statement_timeout_ms
            ))
            .map_err(|e| ExecError::Backend {
                message: e.to_string(),
            })?;
        let messages = client.simple_query(sql).map_err(|e| {
            let timed_out = e
                .code()
                .is_some_and(|c| *c == postgres::error::SqlState::QUERY_CANCELED);
            if timed_out {
                ExecError::Timeout {
                    ms: self.statement_timeout_ms,
                }
            } else {
                ExecError::Engine {
                    message: e.to_string(),
                }
            }
        })?;
        let mut column_names: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for message in messages {
            match message {
                postgres::SimpleQueryMessage::RowDescription(desc) => {
                    column_names = desc.iter().map(|c| c.name().to_string()).collect();
                }
                postgres::SimpleQueryMessage::Row(row) => {
                    if column_names.is_empty() {
                        column_names = row.columns().iter().map(|c| c.name().to_string()).collect();
                    }
                    rows.push((0..row.len()).map(|i| Self::retype(row.get(i))).collect());
                }
                _ => {}
            }
        }
        Ok(ResultTable::new(column_names, rows))
    }

    fn content_hash(&self) -> Result<String, ExecError> {
        let mut client = self.connect()?;
        let mut run = || -> Result<String, postgres::Error> {
            let names = client.query(
                "SELECT tablename FROM pg_tables WHERE schemaname = 'public' ORDER BY tablename",
                &[],
            )?;
            let mut dump = String::new();
            for name_row in names {
                let name: String = name_row.get(0);
                dump.push_str(&format!("table {name}\n"));
                let mut lines = Vec::new();
                for message in client.simple_query(&format!("SELECT * FROM \"{name}\""))? {
                    if let postgres::SimpleQueryMessage::Row(row) = message {
                        let cells: Vec<String> = (0..row.len())
                            .map(|i| row.get(i).unwrap_or("NULL").to_string())
                            .collect();
                        lines.push(cells.join("\u{1}"));
                    }
                }
                lines.sort();
                for line in lines {
                    dump.push_str(&line);
                    dump.push('\n');
                }
            }
            Ok(dump)
        };
        run()
            .map(|dump| sha256_hex(dump.as_bytes()))
            .map_err(|e| ExecError::Backend {
                message: e.to_string(),
            })
    }
}

/// Instantiates the backend a run configuration asks for. The embedded
/// database file must already exist (created by fixture loading).
pub fn build_backend(spec: &DbBackendSpec) -> Result<Box<dyn ExecBackend>, ExecError> {
    match spec.kind {
        BackendKind::Embedded => Ok(Box::new(EmbeddedBackend::open(
            Path::new(&spec.connection),
            spec.statement_timeout_ms,
        )?)),
        BackendKind::Server => Ok(Box::new(ServerBackend::new(
            &spec.connection,
            spec.statement_timeout_ms,
        ))),
    }
}
