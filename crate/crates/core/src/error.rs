use thiserror::Error;

/// Errors produced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cannot encode tree: {0}")]
    Encoding(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("resource limit exceeded: {what} ({requested} > cap {cap})")]
    Resource {
        what: &'static str,
        requested: String,
        cap: u64,
    },

    #[error("no convergence after {iterations} iterations (last update {last_update:e})")]
    Convergence { iterations: u64, last_update: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Process exit code used by the `fbt` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_)
            | Error::Parse(_)
            | Error::Encoding(_)
            | Error::Domain(_)
            | Error::Model(_) => 1,
            Error::Resource { .. } | Error::Convergence { .. } | Error::Internal(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
