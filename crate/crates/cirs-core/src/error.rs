use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty source")]
    EmptySource,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("corpus contains no valid records")]
    EmptyCorpus,

    #[error("need at least {k} distinct score values, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("all clusters pruned; widen the dispersion interval J")]
    AllClustersPruned,

    #[error("unknown stratum {name:?}; available: {available:?}")]
    UnknownStratum {
        name: String,
        available: Vec<String>,
    },

    #[error("seed pool has {got} problems, need at least {need}")]
    PoolTooSmall { got: usize, need: usize },

    #[error("generation transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
