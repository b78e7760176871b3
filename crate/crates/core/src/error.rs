use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all {n_traj} trajectories of model `{model}` diverged at dt = {dt}")]
    AllDiverged {
        model: String,
        dt: f64,
        n_traj: usize,
    },

    #[error("{diverged} of {n_traj} trajectories of model `{model}` diverged (more than 1%)")]
    TooManyDiverged {
        model: String,
        diverged: usize,
        n_traj: usize,
    },

    #[error(
        "record too short: {available} samples after the transient, at least {required} required"
    )]
    SeriesTooShort { available: usize, required: usize },

    #[error("detection window {window} exceeds the recorded span {span}")]
    WindowTooLong { window: f64, span: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    #[error("orientation undefined: zero signal amplitude")]
    ZeroAmplitude,

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residuals: {history:?})"
    )]
    NewtonFailed {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("root bracketing failed on [{lo}, {hi}]")]
    RootFinding { lo: f64, hi: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("pattern lost: {0}")]
    PatternLost(String),
}

pub type Result<T> = std::result::Result<T, Error>;
