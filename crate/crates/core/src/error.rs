use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed configuration document.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// A physical parameter outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller combined otherwise valid inputs in an unsupported way.
    #[error("usage error: {0}")]
    Usage(String),

    /// The susceptivities do not satisfy the hypothesis of the requested
    /// analysis (for instance a convergence result requested in the
    /// oscillatory regime).
    #[error("regime error: {0}")]
    Regime(String),

    /// Quadrature, eigen-solver or integrator failure.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An internal cross-check failed.
    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Usage(_) => 2,
            Error::Domain(_) => 3,
            Error::Regime(_) => 4,
            Error::Numerical(_) | Error::Consistency(_) => 5,
        }
    }
}
