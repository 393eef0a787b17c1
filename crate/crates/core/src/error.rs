use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or derived quantity is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The analytic independence path was asked to handle correlated tap and
    /// signal projections.
    #[error(
        "tap and signal projections are correlated within component {component} \
         (covariance {covariance:.3e}); use conditional_truncated_stats / angle_sweep instead"
    )]
    CorrelatedProjections { component: usize, covariance: f64 },

    /// Post-selection acceptance probability underflowed.
    #[error("empty selection: acceptance probability {probability:e} is below 1e-300")]
    EmptySelection { probability: f64 },

    #[error(
        "insufficient selected samples: {kept} of {total} passed the threshold (need at least 2)"
    )]
    InsufficientSamples { kept: usize, total: usize },

    #[error("no complete bins: {samples} samples, {per_bin} samples per bin")]
    NoCompleteBins { samples: usize, per_bin: usize },

    #[error("no records left after filtering")]
    EmptyRecords,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
