use thiserror::Error;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A chip settings table is missing an entry or names an unknown element.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The settings solver could not reach the requested fidelity.
    #[error("solver did not converge (best fidelity {best_fidelity:.12})")]
    Solver { best_fidelity: f64 },

    /// A statistical estimate has no data to work from.
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),

    /// Decoy-state estimation received degenerate inputs.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A configuration document is not valid JSON.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A configuration field violates an invariant.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::Domain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
