use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed structured text in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed feature file {path}: {reason}")]
    FeatureFormat { path: PathBuf, reason: String },

    #[error("video {video}: feature `{feature}` is missing")]
    MissingFeature { video: String, feature: String },

    #[error("video {video}: feature `{feature}` has {rows} rows, expected {expected}")]
    RowMismatch {
        video: String,
        feature: String,
        rows: usize,
        expected: usize,
    },

    #[error("video {video}: segments [{a_start}, {a_end})s and [{b_start}, {b_end})s overlap")]
    OverlappingSegments {
        video: String,
        a_start: f64,
        a_end: f64,
        b_start: f64,
        b_end: f64,
    },

    #[error("video {video}: invalid segment: {reason}")]
    InvalidSegment { video: String, reason: String },

    #[error("video {video}: invalid shots: {reason}")]
    InvalidShots { video: String, reason: String },

    #[error("feature `{feature}`: {reason}")]
    InvalidFeature { feature: String, reason: String },

    #[error("budget percentage {0} outside (0, 100]")]
    BudgetPercent(f64),

    #[error("budget {budget} invalid for a ground set of {n} items")]
    Budget { budget: usize, n: usize },

    #[error("only {available} eligible snippets, {requested} requested")]
    InsufficientSnippets { available: usize, requested: usize },

    #[error("element {0} is already selected")]
    AlreadySelected(usize),

    #[error("element {element} outside ground set of size {n}")]
    OutOfRange { element: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("component `{component}` cannot use source `{source_name}`: {reason}")]
    IncompatibleSource {
        component: String,
        source_name: String,
        reason: String,
    },

    #[error("instance too large for exhaustive search (n = {n}, k = {k})")]
    InstanceTooLarge { n: usize, k: usize },

    #[error("objective not separable: {0}")]
    NotSeparable(String),

    #[error("model does not match the component grid: {0}")]
    ModelMismatch(String),

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("video {0} has no ground-truth summaries")]
    NoGroundTruth(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("unknown video `{0}`")]
    UnknownVideo(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
