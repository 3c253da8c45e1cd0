use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Every signal is censored under state `theta`, so conditional dynamics are undefined.
    #[error("fully censored: no evidence is processed under theta={theta}")]
    FullyCensored { theta: usize },

    /// A boundary `p` sends the Bayesian rule to point beliefs.
    #[error("degenerate strategy: p=({p11}, {p22}) lies on the boundary")]
    DegenerateStrategy { p11: f64, p22: f64 },

    #[error("size limit exceeded: {outcomes} outcomes exceeds cap {cap}; use the sufficient-statistic path (batch_counts)")]
    TooLarge { outcomes: f64, cap: usize },

    #[error("chain has more than one closed class, so its long-run law is not unique")]
    Reducible,

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
