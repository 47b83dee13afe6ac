use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("missing value at data row {row}, column {column}")]
    MissingValue { row: usize, column: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("class column must have at least 2 distinct labels, found {0}")]
    DegenerateClass(usize),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("feature index {index} out of range for {n_features} features")]
    FeatureOutOfRange { index: usize, n_features: usize },

    #[error("duplicate feature index {0}")]
    DuplicateFeature(usize),

    #[error("empty feature set")]
    EmptyFeatureSet,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too many features for exhaustive search: {0} > 16")]
    TooManyFeatures(usize),

    #[error("invalid selector combination: {0}")]
    InvalidSelector(String),

    #[error("empty intersection of selected feature sets")]
    EmptyIntersection,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class `{0}` has no training rows")]
    ClassAbsent(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version `{0}`")]
    VersionMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_stage(stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
        let stage = stage.into();
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
