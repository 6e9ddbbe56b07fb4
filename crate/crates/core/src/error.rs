use std::path::PathBuf;

use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line_no}: malformed record: {reason}")]
    MalformedRecord { line_no: usize, reason: String },
    #[error("line {line_no}: missing field `{field}`")]
    MissingField { line_no: usize, field: String },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("unknown stopword list `{0}`")]
    UnknownStopwordList(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("requested rank {requested} exceeds the maximum {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("matrix has no nonzero entries")]
    DegenerateMatrix,
    #[error("negative input entry {value} at ({row}, {col})")]
    NegativeInput { row: usize, col: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("perplexity {perplexity} outside (1, {max}) for {n} points")]
    PerplexityOutOfRange { perplexity: f64, max: f64, n: usize },
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("topic {topic_id} keeps {kept} in-corpus words, need at least 2")]
    InsufficientWords { topic_id: usize, kept: usize },
    #[error("matrix format: {0}")]
    MatrixFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
