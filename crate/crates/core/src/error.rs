use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("duplicate sample for vehicle {vehicle_id} at t = {t} s")]
    DuplicateSample { vehicle_id: String, t: f64 },

    #[error("timestamps of vehicle {vehicle_id} are not strictly increasing after sorting")]
    NonMonotoneTime { vehicle_id: String },

    #[error("config error ({key}): {message}")]
    Config { key: String, message: String },

    #[error("empty track")]
    EmptyTrack,

    #[error("no lane-keeping vehicles in lane {lane_id}; cannot build centerline")]
    NoLaneKeepers { lane_id: i32 },

    #[error("degenerate centerline: {0}")]
    DegenerateCenterline(String),

    #[error("lateral series too short: {available:.1} s before the crossing, need {required:.1} s")]
    SeriesTooShort { available: f64, required: f64 },

    #[error("calibration range too short: {length:.2} s, need at least {required:.1} s")]
    RangeTooShort { length: f64, required: f64 },

    #[error("track does not cover [{start}, {end}] s")]
    Coverage { start: f64, end: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad configuration rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
