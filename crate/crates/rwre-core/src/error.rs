use thiserror::Error;

/// Errors shared by the analytic and simulation layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    /// The transience criterion landed within 1e-9 of its threshold and the
    /// verdict cannot be trusted numerically.
    #[error("transience criterion undecidable: |{value} - {threshold}| < 1e-9")]
    BorderlineCriterion { value: f64, threshold: f64 },

    /// Lazy tree growth would exceed the configured node budget.
    #[error("node budget exceeded ({budget} nodes)")]
    BudgetExceeded { budget: usize },

    /// An estimator requiring transience was invoked on a recurrent law.
    #[error("the walk is not transient for this (mark law, offspring law) pair")]
    NotTransient,

    #[error("need at least 2 uncensored regeneration records, found {found}")]
    InsufficientRegenerations { found: usize },

    /// A goodness-of-fit table kept an expected cell count below 5 even after
    /// pooling.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("{ancestor} is not an ancestor of {descendant}")]
    NotAncestor { ancestor: String, descendant: String },

    #[error("invalid vertex: {0}")]
    InvalidVertex(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
