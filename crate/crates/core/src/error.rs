use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every error renders as `<category>: <detail>` so callers can prefix it
/// with `error: ` and get a machine-parsable line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("integrity: {0}")]
    Integrity(String),

    #[error("lookup: {0}")]
    Lookup(String),

    #[error("parse: {source_name}: record {record}: {message}")]
    Parse {
        source_name: String,
        /// 1-based line number of the malformed record.
        record: usize,
        message: String,
    },

    #[error("io: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("remote-embedder: batch {batch}: {message}")]
    RemoteEmbedder { batch: usize, message: String },

    #[error("{source} (chunk {chunk_id})")]
    Embedding {
        chunk_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Integrity(_) => "integrity",
            Error::Lookup(_) => "lookup",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::RemoteEmbedder { .. } => "remote-embedder",
            Error::Embedding { source, .. } => source.category(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
