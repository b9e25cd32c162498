use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("triple {0} is empty after normalization")]
    EmptyField(&'static str),
    #[error("claim {0} has empty text")]
    EmptyClaim(u64),
    #[error("invalid character span [{start}, {end})")]
    InvalidSpan { start: usize, end: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("unknown verdict label {0:?}")]
    UnknownLabel(String),
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no triples could be extracted from claim {0}")]
    EmptyClaimExtraction(u64),

    #[error("corpus contains no sentences")]
    EmptyCorpus,
    #[error("unknown sentence id {0}")]
    UnknownSentence(usize),
    #[error("gold evidence sentence {0} is not in the corpus")]
    UnknownGoldSentence(crate::model::SentenceRef),
    #[error("retrieval mode {0:?} requires an embedding provider")]
    MissingEmbedder(crate::retrieval::RetrievalMode),

    #[error("invalid NLI distribution: {0}")]
    InvalidDistribution(String),
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("server returned status {status}: {message}")]
    Server { status: u16, message: String },

    #[error("embedding has dimension {actual}, model expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("every tuple is a known positive for relation {0:?}")]
    NoNegativeAvailable(String),
    #[error("fact store needs at least two distinct tuples")]
    TooFewTuples,
    #[error("no training facts supplied")]
    NoTrainingFacts,
    #[error("invalid model artifact: {0}")]
    ModelFormat(String),

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, reason: reason.into() }
    }

    /// True for failures of the remote scorer connection itself.
    pub fn is_transport(&self) -> bool {
        matches!(self, Error::Transport { .. })
    }
}
