use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The adaptive integrator needed a step below the underflow floor.
    #[error("stiffness: required step {step} ps below floor at t = {t} ps")]
    Stiffness { t: f64, step: f64 },

    /// A density-matrix invariant drifted beyond 10x its evolution tolerance.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// Emission integrals requested on a trajectory that has not decayed out.
    #[error("incomplete decay: remaining excited population {remaining:.3e} > 0.01")]
    IncompleteDecay { remaining: f64 },

    #[error("fit domain: {0}")]
    FitDomain(String),

    #[error("fit quality: residual {residual:.3e} exceeds 0.1 x amplitude {amplitude:.3e}")]
    FitQuality { residual: f64, amplitude: f64 },

    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration/IO problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
