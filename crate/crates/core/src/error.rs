use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} sites, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{n_sites} sites exceeds the limit of {max} for this operation")]
    TooLarge { n_sites: usize, max: usize },

    #[error("detailed balance violated (max relative violation {max_violation:e})")]
    DetailedBalance { max_violation: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("negative rate {value:e} at config {config}, site {site}")]
    NegativeRate { value: f64, config: u64, site: usize },

    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {sweeps} sweeps (last energy change {delta:e})")]
    NonConvergence { sweeps: usize, delta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::SiteOutOfRange { .. } => "site_out_of_range",
            Error::InvalidParams(_) => "invalid_params",
            Error::TooLarge { .. } => "too_large",
            Error::DetailedBalance { .. } => "detailed_balance",
            Error::NegativeTime(_) => "negative_time",
            Error::NegativeRate { .. } => "negative_rate",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::Unsupported(_) => "unsupported",
            Error::Parse(_) => "parse",
            Error::Numerical(_) => "numerical",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
