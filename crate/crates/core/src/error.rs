use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate column")]
    DegenerateColumn,

    #[error("{0} undefined for fewer than two clusters")]
    TooFewClusters(&'static str),

    #[error("zero inter-centroid distance")]
    ZeroCentroidDistance,

    #[error("zero variance clusters")]
    ZeroVarianceClusters,

    #[error("eigen solver did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("rank deficiency: attained rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("covariance collapse in gaussian mixture")]
    CovarianceCollapse,

    #[error("balance infeasible for {n} vertices into {k} parts")]
    BalanceInfeasible { n: usize, k: usize },

    #[error("non-finite residual in factorisation")]
    NonFiniteResidual,

    #[error("every configuration in the grid failed to fit")]
    AllFitsFailed,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("distribution does not sum to one (sum = {0})")]
    NotNormalized(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
