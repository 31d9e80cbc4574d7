use thiserror::Error;

use crate::model::ElementId;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("element {id} is out of range for a list of {size} elements")]
    ElementOutOfRange { id: ElementId, size: usize },

    #[error("a measurement must compare two distinct elements, got {0} twice")]
    SelfComparison(ElementId),

    #[error("ordering of length {found} does not match list size {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("element {0} is not in the remaining set")]
    NotRemaining(ElementId),

    #[error("measurement sequence broken: expected {expected}, found {found}")]
    SequenceGap { expected: u64, found: u64 },

    #[error("invalid error model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("list of {size} elements exceeds the limit of {limit} for {what}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("sampler gave up after {attempts} attempts")]
    BudgetExceeded { attempts: u64 },

    #[error("records contradict each other under a noiseless channel: {records:?}")]
    Inconsistent { records: Vec<u64> },

    #[error("journal: {0}")]
    Journal(String),

    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
}

impl From<std::io::Error> for CoreError {
    fn from(err: std::io::Error) -> Self {
        CoreError::Journal(err.to_string())
    }
}
