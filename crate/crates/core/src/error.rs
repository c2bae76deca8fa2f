use crate::grid::GridSpec;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(GridSpec, GridSpec),

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("epsilon {eps} out of range: {reason}")]
    EpsilonOutOfRange { eps: f64, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no autocorrelation built for epsilon {0}")]
    MissingAutocorrelation(f64),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("solution blew up at t = {t}: max-norm {norm:e}")]
    BlowUp { t: f64, norm: f64 },

    #[error("Picard iteration failed to contract at t = {t} (subinterval shrank below dt = {dt})")]
    NonContraction { t: f64, dt: f64 },

    #[error("Monte Carlo statistic failed at seed {seed}: {source}")]
    Worker {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
