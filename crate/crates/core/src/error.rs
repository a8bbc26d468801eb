//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A (feature imbalance, outcome imbalance, odds ratio) triple whose
    /// implied 2x2 cell would fall outside [0, 1].
    #[error("infeasible contingency spec: cell {cell} = {value} is outside [0, 1]")]
    InfeasibleCell { cell: &'static str, value: f64 },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The design matrix is rank deficient; `columns` names the offending
    /// columns (constant or linearly dependent on earlier ones).
    #[error("rank-deficient design: column(s) {columns:?}")]
    RankDeficient { columns: Vec<String> },

    /// The outcome contains a single class, so the logistic MLE diverges.
    #[error("separation: outcome contains a single class")]
    SingleClassOutcome,

    #[error("undefined AUC: labels contain a single class")]
    UndefinedAuc,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("{context}: {source}")]
    WithContext {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::WithContext {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
