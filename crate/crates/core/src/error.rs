use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("operation requires quadratic clients")]
    NotQuadratic,

    #[error("singular system is inconsistent (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("problem too large for the dense oracle: nd = {nd} exceeds {limit}")]
    ProblemTooLarge { nd: usize, limit: usize },

    #[error("cannot partition {samples} samples into {shards} equal shards")]
    Indivisible { samples: usize, shards: usize },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures specific to the IDX container.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("bad magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}
