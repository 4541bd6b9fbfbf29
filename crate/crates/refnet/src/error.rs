use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = RefnetError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RefnetError {
    #[error("{path}: {reason} (at byte offset {offset})")]
    Idx {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("training set too small: {available} samples selected, batch size {batch_size}")]
    EmptyTrainingSet { available: usize, batch_size: usize },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("expected input of {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error(transparent)]
    Core(#[from] factorlens::Error),
}
