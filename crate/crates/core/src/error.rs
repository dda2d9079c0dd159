use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A kernel or weight function was evaluated at its singular point.
    #[error("singularity in {function} at {at}")]
    Singularity { function: &'static str, at: f64 },

    /// An iterative method stopped before reaching its tolerance.
    #[error("{method} did not converge after {iterations} iterations (achieved {achieved:e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        achieved: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// No data point lies within the truncated support around the query.
    #[error("no point contributes to the kernel sum at the query position")]
    EmptySupport,

    #[error("size mismatch: {0}")]
    Size(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mismatched topology: {0}")]
    Topology(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidParameter(detail.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors that stem from numerical routines rather than from
    /// arguments or I/O. The CLI maps these to a dedicated exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Singularity { .. } | Error::Convergence { .. } | Error::EmptySupport
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}
