use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}line {line}: {msg}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("invalid verb slot {0:?}: expected lemma.as:s, lemma.aso:s or lemma.aso:o")]
    InvalidVerbSlot(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("posterior undefined for ({verb}, {noun}): joint probability is zero")]
    UndefinedPosterior { verb: String, noun: String },

    #[error("class membership undefined for noun {noun}: mixture probability is zero")]
    UndefinedMembership { noun: String },

    #[error("training failed: {0}")]
    Training(String),

    #[error("empty sample for {0}: no noun is covered by the model")]
    EmptySample(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: content hash mismatch (expected {expected}, found {found})")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line,
            msg: msg.into(),
        }
    }

    /// Attaches a file path to parse errors; other variants pass through.
    pub(crate) fn at_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: Some(p.into()),
                line,
                msg,
            },
            other => other,
        }
    }

    /// Process exit status used by the command-line front end:
    /// 1 usage, 2 data/parse, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Parse { .. }
            | Error::InvalidVerbSlot(_)
            | Error::NotFound(_)
            | Error::EmptySample(_)
            | Error::HashMismatch { .. }
            | Error::Io(_) => 2,
            Error::UndefinedPosterior { .. }
            | Error::UndefinedMembership { .. }
            | Error::Training(_)
            | Error::Domain(_) => 3,
        }
    }
}
