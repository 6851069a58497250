use thiserror::Error;

use crate::motion::BicycleParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("degenerate box: footprint area {area:e} m^2 is below {min:e} m^2")]
    DegenerateBox { area: f64, min: f64 },

    #[error("time interval must be non-zero")]
    ZeroInterval,

    #[error("timestamps must strictly increase ({prev} then {next})")]
    NonMonotoneTimestamps { prev: f64, next: f64 },

    #[error("bicycle solver did not converge after {iterations} iterations (loss {loss:e})")]
    NoConvergence {
        iterations: usize,
        loss: f64,
        best: BicycleParams,
    },

    #[error("detection {index} has no fusion weight assigned")]
    MissingWeight { index: usize },

    #[error("mixed motion models in one fusion run: {first} and {other}")]
    MixedMotionModels {
        first: &'static str,
        other: &'static str,
    },

    #[error("fusion window is empty")]
    EmptyWindow,

    #[error("fusion window holds {len} frames but at most {max} are allowed")]
    WindowTooLong { len: usize, max: usize },

    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("no ground-truth boxes to evaluate against")]
    NoGroundTruth,

    #[error("detection is missing a track id")]
    MissingTrackId,

    #[error("record parse error on line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
