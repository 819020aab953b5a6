use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the numerical core.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("quadratic coefficient matrix is not symmetric at t = {time} (asymmetry {asymmetry:e})")]
    NonSymmetricB { time: f64, asymmetry: f64 },

    #[error("symplectic defect {defect:e} exceeds tolerance {tolerance:e}")]
    SymplecticDriftExceeded { defect: f64, tolerance: f64 },

    #[error("conversion left an imaginary residue of {residue:e}")]
    NonRealResult { residue: f64 },

    #[error("matrix `{name}` is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularMatrix { name: String, condition: f64 },

    #[error("dispersion matrix is singular")]
    SingularDispersion,

    #[error("dispersion matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dispersion violates the uncertainty relation (smallest eigenvalue {min_eigenvalue:e})")]
    UncertaintyViolated { min_eigenvalue: f64 },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("Hermite matrix R is not symmetric (asymmetry {asymmetry:e})")]
    AsymmetricR { asymmetry: f64 },

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("negative probability {value:e} for n = {index:?}")]
    NegativeProbability { value: f64, index: Vec<u32> },

    #[error("quadrature grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("Wronskian drifted by {drift:e} at t = {time}")]
    WronskianDrift { drift: f64, time: f64 },

    #[error("lost track of the branch of sqrt(eps): |eps| = {modulus:e}")]
    BranchTrackingLost { modulus: f64 },

    #[error("frequency profile is not periodic with period {period}")]
    NotPeriodic { period: f64 },

    #[error("odd cat state is null for |alpha| = {modulus:e}")]
    NullState { modulus: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonSymmetricB { .. } => "NonSymmetricB",
            Error::SymplecticDriftExceeded { .. } => "SymplecticDriftExceeded",
            Error::NonRealResult { .. } => "NonRealResult",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::SingularDispersion => "SingularDispersion",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::UncertaintyViolated { .. } => "UncertaintyViolated",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::AsymmetricR { .. } => "AsymmetricR",
            Error::DegreeTooLarge { .. } => "DegreeTooLarge",
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::WronskianDrift { .. } => "WronskianDrift",
            Error::BranchTrackingLost { .. } => "BranchTrackingLost",
            Error::NotPeriodic { .. } => "NotPeriodic",
            Error::NullState { .. } => "NullState",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
