use thiserror::Error;

/// Failures raised by the numerical modules and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("domain too small: {reason}; suggested bounds [{suggested_min}, {suggested_max}]")]
    DomainTooSmall {
        reason: String,
        suggested_min: f64,
        suggested_max: f64,
    },
    #[error("phase convention: {0}")]
    PhaseConvention(String),
    #[error("ambiguous flea: right mass {right_mass:.4} of the perturbed ground state lies in [0.45, 0.55]")]
    AmbiguousFlea { right_mass: f64 },
    #[error("truncation: captured weight {captured:.6} below {required}")]
    Truncation { captured: f64, required: f64 },
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
