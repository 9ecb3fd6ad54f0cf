use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("support cap exceeded: {needed} entries requested, cap is {cap}")]
    SupportCap { needed: usize, cap: usize },

    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("distribution must be symmetric: {0}")]
    NotSymmetric(&'static str),

    #[error("truncation tolerance exceeded: {0}")]
    Truncation(String),

    #[error("inadmissible model: {0}")]
    Inadmissible(String),

    #[error("internal chain is reducible: {0}")]
    Reducible(String),

    #[error("neighbourhood exceeded at t = ({t1}, {t2}): eigenvalue gap {gap:e}")]
    NeighbourhoodExceeded { t1: f64, t2: f64, gap: f64 },

    #[error("aperiodicity violated: {0}")]
    Periodic(String),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("no convergence after {iterations} iterations (last increment {increment:e})")]
    NoConvergence { iterations: usize, increment: f64 },

    #[error("infeasible at level {k}: constraint {constraint} violated")]
    Infeasible { k: usize, constraint: String },

    #[error("numeric range: {0}")]
    Range(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
