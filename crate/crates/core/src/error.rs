use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate accession {0}")]
    DuplicateAccession(String),

    #[error("duplicate fragment id {0}")]
    DuplicateFragment(String),

    #[error("clone {clone} declares {declared} fragments but {found} rows follow")]
    FragmentCount {
        clone: String,
        declared: usize,
        found: usize,
    },

    #[error("unknown fragment id {0}")]
    UnknownFragment(String),

    #[error("unknown clone id {0}")]
    UnknownClone(String),

    #[error("overlaps do not share exactly one fragment")]
    NoSharedFragment,

    #[error("invalid parameter {key}: {msg}")]
    InvalidParam { key: String, msg: String },

    #[error("graph has {n} vertices, brute force limit is {max}")]
    TooLarge { n: usize, max: usize },

    #[error("vertex {0} not in graph")]
    NoSuchVertex(usize),

    #[error("component with clones [{clones}] is still not interval after {actions} repair actions")]
    Unresolvable { clones: String, actions: usize },

    #[error("clone {0} has no placed fragments")]
    NoPlacedFragments(String),

    #[error("graph is not an interval graph")]
    NotInterval,

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate a broken internal contract rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::Invariant(_) | Error::Unresolvable { .. } | Error::NotInterval
        )
    }
}
