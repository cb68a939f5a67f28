use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown language tag \"{tag}\"")]
    UnknownLanguage { line: usize, tag: String },

    #[error("line {line}: label \"{label}\" is not in the coarse (universal) tagset")]
    CoarseLabel { line: usize, label: String },

    #[error("no utterances")]
    NoUtterances,

    #[error("cannot write corpus: {0}")]
    Unrepresentable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("utterance {utterance}, position {position}: {message}")]
    Misaligned {
        utterance: usize,
        position: usize,
        message: String,
    },

    #[error("utterance {utterance}, token {position}: missing POS label")]
    MissingLabel { utterance: usize, position: usize },

    #[error("no features retained (min_count = {min_count})")]
    NoFeatures { min_count: u32 },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("grid point c1={c1} c2={c2} fold={fold}: {source}")]
    GridPoint {
        c1: f64,
        c2: f64,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
