use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("divergence suspected: {0}")]
    DivergenceSuspected(String),

    #[error(transparent)]
    Parse(#[from] crate::kernels::ParseError),
}

impl Error {
    /// Stable short tag used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Usage(_) => "usage",
            Error::Evaluation(_) => "evaluation",
            Error::DivergenceSuspected(_) => "divergence_suspected",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
