use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate document: {0}")]
    DegenerateDocument(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("no embedding for segment {0:?}")]
    MissingEmbedding(String),

    #[error("invalid embedding table: {0}")]
    InvalidEmbedding(String),

    #[error("metric adapter unavailable: {0}")]
    AdapterUnavailable(String),

    #[error("metric adapter returned score {score} outside [0, 1] at position {index}")]
    AdapterRangeViolation { index: usize, score: f64 },

    #[error("metric adapter protocol error: {0}")]
    AdapterProtocol(String),

    #[error("invalid range: lo = {lo} must be below hi = {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("invalid entropic parameters: {0}")]
    InvalidParams(String),

    #[error("transportation simplex did not terminate after {0} pivots")]
    SolverNonconvergence(usize),

    #[error("invalid candidate set: {0}")]
    InvalidCandidates(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("pair {index}: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("document pair ({row}, {col}): {source}")]
    DocumentPair {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("instance {id}: {source}")]
    Instance {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips positional wrappers and returns the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::BatchItem { source, .. }
            | Error::DocumentPair { source, .. }
            | Error::Instance { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_adapter(&self) -> bool {
        matches!(
            self.root(),
            Error::AdapterUnavailable(_)
                | Error::AdapterRangeViolation { .. }
                | Error::AdapterProtocol(_)
        )
    }

    pub(crate) fn at_batch_item(self, index: usize) -> Error {
        Error::BatchItem {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_pair(self, row: usize, col: usize) -> Error {
        Error::DocumentPair {
            row,
            col,
            source: Box::new(self),
        }
    }

    pub fn in_instance(self, id: impl Into<String>) -> Error {
        Error::Instance {
            id: id.into(),
            source: Box::new(self),
        }
    }
}
