use thiserror::Error;

/// Errors produced by scheme construction, the stability analysis and the
/// time-stepping drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{which} coefficients sum to {sum}, expected 1")]
    ConsistencyViolation { which: &'static str, sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("parameter r = {0} makes sin(pi r) vanish")]
    SingularParameter(f64),

    #[error("operation not defined for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("matrix determinant {0} differs from 1")]
    NonUnitDeterminant(f64),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("no sign change found while bracketing the root for m = {0}")]
    RootNotBracketed(usize),

    #[error("stability polynomial coincides with the Chebyshev form")]
    PolynomialCoincides,

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("reduced matrices are not simultaneously diagonalizable (residual {0:e})")]
    NotSimultaneouslyDiagonalizable(f64),

    #[error("reduced stiffness eigenvalue {0} is not positive")]
    NonPositiveLambda(f64),

    #[error("reduced stiffness spectrum is not strictly positive (min eigenvalue {0})")]
    NonPositiveSpectrum(f64),

    #[error("trajectory norm exceeded 1e150 after {steps_completed} steps")]
    ExponentialBlowup { steps_completed: usize },

    #[error("no critical point of the stability polynomial in the search bracket (r = {r})")]
    NoCriticalPoint { r: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
