use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: malformed CSV: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("{context}, line {line}: {message}")]
    Parse {
        context: String,
        line: u64,
        message: String,
    },

    #[error("duplicate state label '{0}'")]
    DuplicateLabel(String),

    #[error("transition {a}-{b} listed twice with conflicting values {first} and {second}")]
    ConflictingTransition {
        a: String,
        b: String,
        first: f64,
        second: f64,
    },

    #[error("transition {0}-{0} couples a state to itself")]
    SelfTransition(String),

    #[error("unknown state label '{0}'")]
    UnknownLabel(String),

    #[error("invalid {what}: {message}")]
    InvalidParameter { what: &'static str, message: String },

    #[error("mixing angle undefined: pump and Stokes amplitudes are both zero")]
    UndefinedMixingAngle,

    #[error("counter-diabatic field requires a nonzero initial-target dipole moment")]
    ZeroBridgeDipole,

    #[error(
        "integration diverged: norm drift {drift:.3e} exceeds {limit:.1e} at dt = {dt_au} a.u.; \
         try a smaller time step"
    )]
    IntegrationDiverged { drift: f64, limit: f64, dt_au: f64 },

    #[error("scan point {parameter} = {value} failed: {source}")]
    ScanPoint {
        parameter: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            message: message.into(),
        }
    }

    /// True when the failure came out of the integrator rather than from
    /// malformed input.
    pub fn is_integration_failure(&self) -> bool {
        match self {
            Error::IntegrationDiverged { .. } => true,
            Error::ScanPoint { source, .. } => source.is_integration_failure(),
            _ => false,
        }
    }
}
