use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spanning directions are linearly dependent")]
    RankDeficient,

    #[error("empty parameter scan range [{lo}, {hi}]")]
    EmptyScanRange { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not in the set (membership residual {residual:e})")]
    NotInSet { residual: f64 },

    #[error("{check}: insufficient data ({found} usable, need {needed})")]
    InsufficientData {
        check: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("projection failed at iteration {iteration}: {source}")]
    Projection {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("coordinate {0} is undetermined: its column of C vanishes and its admissible set is unbounded")]
    Undetermined(usize),

    #[error("iteration diverged after {} blocks", .partial.len())]
    Diverged { partial: Box<crate::engine::Trace> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::Projection { .. } => e,
            e => Error::Projection {
                iteration,
                source: Box::new(e),
            },
        }
    }
}
