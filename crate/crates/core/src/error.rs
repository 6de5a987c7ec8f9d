use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root solver did not converge: {0}")]
    NoConvergence(String),

    #[error(
        "conditioning acceptance rate {rate:.3e} ({accepted} of {tries} fields) is below {min:.0e}; \
         widen the band or move m closer to typical measurements"
    )]
    LowAcceptance {
        rate: f64,
        accepted: usize,
        tries: u64,
        min: f64,
    },

    #[error("cannot estimate metrics from an empty record stream")]
    EmptyRecords,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
