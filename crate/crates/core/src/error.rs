use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A series did not reach the requested accuracy within its term budget.
    #[error("{op}: accuracy {requested:e} not reached after {terms} terms (remainder bound {achieved:e})")]
    AccuracyNotReached {
        op: &'static str,
        requested: f64,
        achieved: f64,
        terms: usize,
    },

    /// The temperature map has a non-positive denominator.
    #[error("physical temperature undefined at beta* = {beta_star} (denominator {denominator})")]
    UndefinedTemperature { beta_star: f64, denominator: f64 },

    #[error("no bracket: target {target} outside attainable range [{lo}, {hi}]")]
    NoBracket { target: f64, lo: f64, hi: f64 },

    #[error("root search did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// Dressed-state mixing ratios are undefined for zero coupling.
    #[error("degenerate coupling: lambda * sqrt(n + 1) = 0 for n = {n}")]
    DegenerateCoupling { n: usize },

    #[error("more than {limit} consecutive rejected draws")]
    RejectionOverflow { limit: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse { .. } | Error::Json(_) => 2,
            Error::Domain { .. }
            | Error::UndefinedTemperature { .. }
            | Error::NoBracket { .. }
            | Error::DegenerateCoupling { .. }
            | Error::InvalidParameter { .. }
            | Error::RejectionOverflow { .. } => 3,
            Error::AccuracyNotReached { .. } | Error::NoConvergence { .. } => 4,
            Error::Io { .. } => 1,
        }
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
