use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice spec: {0}")]
    LatticeSpec(String),

    #[error("lattice document failed validation: {0}")]
    LatticeInvalid(String),

    #[error("configuration has {got} spins but the lattice has {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("configuration belongs to a different lattice (tag {got:#x}, expected {expected:#x})")]
    LatticeMismatch { expected: u64, got: u64 },

    #[error("unknown spin id {0}")]
    UnknownSpin(usize),

    #[error("invalid model parameter `{field}`: {message}")]
    Param { field: &'static str, message: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("time {t} is outside the schedule [0, {total}]")]
    ScheduleTime { t: f64, total: u64 },

    #[error("temperature must be positive (got {0})")]
    NonPositiveTemperature(f64),

    #[error("transverse field is zero; the imaginary-time coupling diverges, use the classical engine")]
    ZeroTransverseField,

    #[error("classical engine cannot run a schedule with a transverse field (Γ = {0}); use the PIMC engine")]
    TransverseFieldInClassical(f64),

    #[error("system of {n} spins exceeds the {limit}-spin limit of {mode}")]
    TooLarge { n: usize, limit: usize, mode: &'static str },

    #[error("{0}")]
    Analysis(String),

    #[error("invalid run spec at `{path}`: {message}")]
    Spec { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, message: impl Into<String>) -> Self {
        Error::Param {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
