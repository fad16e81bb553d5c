use thiserror::Error;

/// Errors produced by parsing, configuration and the mining engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("timestamp regression at line {line}: {msg}")]
    OutOfOrder { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),

    #[error("oracle bound exceeded: {events} events > limit {limit}")]
    OracleBound { events: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
