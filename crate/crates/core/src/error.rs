use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("non-uniform timestep at row {row}: expected dt={expected}, got {got}")]
    NonUniformTimestep { row: usize, expected: f64, got: f64 },

    #[error("negative speed {speed} at row {row}")]
    NegativeSpeed { row: usize, speed: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("fuel-cell power {power} W outside [0, {max}] W")]
    PowerOutOfRange { power: f64, max: f64 },

    #[error("battery cannot deliver {power} W (V_oc={voc} V, R_int={rint} ohm)")]
    PowerInfeasible { power: f64, voc: f64, rint: f64 },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("learning curve is empty")]
    EmptyCurve,

    #[error("heatmap cell ({state_n}, {action_n}) has no record")]
    MissingCell { state_n: usize, action_n: usize },

    #[error("invalid data in {what}: {msg}")]
    InvalidData { what: String, msg: String },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidData {
            what: what.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by an input data file (missing, unreadable, or malformed).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::NonUniformTimestep { .. }
                | Error::NegativeSpeed { .. }
                | Error::InvalidData { .. }
                | Error::Io { .. }
        )
    }
}
