use std::path::PathBuf;

/// Errors produced anywhere in the crate.
///
/// Variants are split into configuration problems (bad input, unknown keys,
/// incompatible grids) and numerical failures (non-convergence, energy
/// increase, lost symmetry). The CLI maps the former to exit code 2 and the
/// latter to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("angle {angle} is not a multiple of the grid spacing {spacing}")]
    NonCommensurate { angle: f64, spacing: f64 },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("Newton iteration did not converge (last residual {residual:e} after {iterations} iterations)")]
    NewtonFailed { residual: f64, iterations: usize },

    #[error("solution left the positive branch: {0}")]
    WrongBranch(String),

    #[error("negative eigenvalue {eigenvalue:e} in mode {mode:?} at the cutoff shell k_max = {k_max}; increase k_max")]
    CutoffViolated {
        k_max: usize,
        mode: (usize, usize),
        eigenvalue: f64,
    },

    #[error("unstable basis requires Morse index 5, found {0}")]
    IndexNotFive(usize),

    #[error("basis orientation could not be fixed: {0}")]
    Orientation(String),

    #[error("initial amplitude too large: max |u| = {max_abs}")]
    AmplitudeTooLarge { max_abs: f64 },

    #[error("energy increased at step {step}: {before:.15e} -> {after:.15e}")]
    EnergyIncreased {
        step: usize,
        before: f64,
        after: f64,
    },

    #[error("maximum principle violated at step {step}: max |u| = {max_abs}")]
    MaximumPrinciple { step: usize, max_abs: f64 },

    #[error("time step {dt} exceeds the IMEX limit eps^2/2 = {limit}")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("energy level {level} is not crossed (log spans [{min}, {max}])")]
    LevelNotCrossed { level: f64, min: f64, max: f64 },

    #[error("sweep endpoints did not reach opposite constants: {0}")]
    SweepEndpoints(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::NonCommensurate { .. } | Error::TimeStepTooLarge { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
