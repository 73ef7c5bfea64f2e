use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular point of the amplitude equation at x = {x}, phi = {phi}")]
    SingularPoint { x: f64, phi: f64 },

    #[error("step size underflow at t = {at}")]
    StepUnderflow { at: f64 },

    #[error("step budget exhausted at t = {at}")]
    MaxSteps { at: f64 },

    #[error("no return to the section from amplitude {amplitude}: {reason}")]
    NoReturn { amplitude: f64, reason: String },

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{count} limit cycles exceed the degree bound {bound}")]
    BoundViolation { count: usize, bound: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPoint { .. }
                | Error::StepUnderflow { .. }
                | Error::MaxSteps { .. }
                | Error::NoReturn { .. }
                | Error::DegenerateOrbit(_)
                | Error::BoundViolation { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
