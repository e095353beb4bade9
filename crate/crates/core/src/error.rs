use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty{}", .0.as_deref().map(|s| format!(" after {s}")).unwrap_or_default())]
    EmptyCorpus(Option<String>),

    #[error("boundary marker 0x{marker:02x} already occurs in the source at byte {offset}; choose a different marker")]
    MarkerCollision { marker: u8, offset: usize },

    #[error("document delimiter {0:?} does not occur in the text")]
    MissingDelimiter(String),

    #[error("text is not space-delimited")]
    NotSpaceDelimited,

    #[error("wrong text encoding: expected {expected} mode")]
    WrongEncoding { expected: &'static str },

    #[error("stream of length {len} is too short (need more than {needed})")]
    StreamTooShort { len: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient points for a fit: {got} usable, {needed} required")]
    InsufficientPoints { got: usize, needed: usize },

    #[error("non-positive value {value} at abscissa {at} cannot be log-transformed")]
    NonPositive { at: f64, value: f64 },

    #[error("fit range is degenerate: all abscissae are equal")]
    DegenerateRange,

    #[error("sequence is constant; autocorrelation is undefined (zero variance)")]
    ConstantSequence,

    #[error("vocabulary has {types} types; at least {needed} are required")]
    VocabularyTooSmall { types: usize, needed: usize },

    #[error("only {found} rare-word occurrences; at least 3 are required")]
    TooFewRareOccurrences { found: usize },

    #[error("markov model has no transitions")]
    EmptyModel,

    #[error("seed context is not present in the model")]
    UnknownContext,

    #[error("compressor `{command}` failed: {detail}")]
    Compressor { command: String, detail: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a fitting procedure, as opposed to bad input data.
    pub fn is_fit_failure(&self) -> bool {
        matches!(
            self,
            Error::InsufficientPoints { .. } | Error::NonPositive { .. } | Error::DegenerateRange
        )
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
