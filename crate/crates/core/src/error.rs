use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("penalty parameter must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("offset body is empty: delta {delta} must be below radius {radius}")]
    InvalidDelta { delta: f64, radius: f64 },
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("norm {0} is not supported on this grid")]
    UnsupportedNorm(String),
    #[error("time series needs at least two samples")]
    EmptySeries,
    #[error("unstable step: dt = {dt} exceeds the cap {cap} ({reason})")]
    UnstableStep { dt: f64, cap: f64, reason: &'static str },
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sampling grids are not aligned: {0}")]
    MisalignedSampling(String),
    #[error("run failed: {0}")]
    RunFailed(String),
    #[error("initial data outside the invariant region: max F/eps = {ratio} > p = {p}")]
    InitialDataOutsideRegion { ratio: f64, p: f64 },
    #[error("operation requires a ball, got {0}")]
    UnsupportedBody(String),
    #[error("operation requires a 1D grid, got dim {0}")]
    UnsupportedDim(usize),
    #[error("sweep needs at least {needed} epsilon values, got {got}")]
    DegenerateSweep { needed: usize, got: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("box counting resolved only {got} scale(s) below the fill limit, need {needed}")]
    TooFewScales { needed: usize, got: usize },
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("parse error in {path:?} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }
}
