use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sparsity budget {k} exceeds dimension {dim}")]
    BudgetExceedsDimension { k: usize, dim: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("index set is not strictly increasing at position {position}")]
    UnsortedIndices { position: usize },

    #[error("vector has empty support")]
    EmptySupport,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("invalid label {label} for sample {sample}: classification losses need labels in {{-1, +1}}")]
    InvalidLabel { sample: usize, label: f64 },

    #[error("dual variable {value} of sample {sample} is outside its feasible interval [{lo}, {hi}]")]
    Infeasible {
        sample: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration of {count} supports exceeds the budget of {limit}")]
    CombinatorialBudget { count: u128, limit: u128 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("reference vector is zero")]
    ZeroReference,

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
