use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no sentences")]
    NoSentences,

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("row {row}: ragged row with {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("duplicate language code {0:?}")]
    DuplicateLanguage(String),

    #[error("duplicate feature id {0:?}")]
    DuplicateFeature(String),

    #[error("non-binary cell {value:?} at language {language:?}, feature {feature:?}")]
    NonBinaryCell {
        language: String,
        feature: String,
        value: String,
    },

    #[error("crop removed all {0}")]
    CropEmptied(&'static str),

    #[error("undefined cosine: {0} is a zero vector")]
    UndefinedCosine(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("language {language:?} missing from {store} store")]
    MissingLanguage { store: String, language: String },

    #[error("invalid coordinate for {language:?}: lat {lat}, lon {lon}")]
    InvalidCoordinate { language: String, lat: f64, lon: f64 },

    #[error("feature-name mismatch; only in model: {only_in_model:?}; only in rows: {only_in_rows:?}")]
    FeatureMismatch {
        only_in_model: Vec<String>,
        only_in_rows: Vec<String>,
    },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("fold {fold} (held-out target {target:?}): {source}")]
    Fold {
        fold: usize,
        target: String,
        #[source]
        source: Box<Error>,
    },

    #[error("predicted order is not a permutation of the gold candidates: {0}")]
    PermutationMismatch(String),

    #[error("pair sets differ; missing from first: {missing_from_a:?}; missing from second: {missing_from_b:?}")]
    PairSetMismatch {
        missing_from_a: Vec<String>,
        missing_from_b: Vec<String>,
    },

    #[error("unmapped language {0:?}")]
    UnmappedLanguage(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by internal bugs rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Fold { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
