use thiserror::Error;

/// Errors raised by the computational modules.
///
/// Every variant maps to an owning module and a stable kind string so that
/// front ends can report failures without matching on message text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate polytope: affine hull has dimension {found}, expected {expected}")]
    DegeneratePolytope { found: usize, expected: usize },

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("overflow: term log-modulus {log_modulus:.3} exceeds the safe range")]
    Overflow { log_modulus: f64 },

    #[error("quadrature did not converge after {refinements} refinements (last difference {last_diff:e})")]
    NoConvergence { refinements: usize, last_diff: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole hit: linear factor {factor} vanishes at s (|u| = {modulus:e})")]
    PoleHit { factor: String, modulus: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("denominator nearly vanishes on the torus fiber (min ratio {min_ratio:e})")]
    NearZeroDenominator { min_ratio: f64 },

    #[error("singular exponent matrix")]
    SingularMatrix,

    #[error("repeated root near {0}")]
    RepeatedRoot(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("coefficients lie on the principal A-determinant locus: {0}")]
    OnDiscriminant(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Module that conventionally raises this error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::DegeneratePolytope { .. } | Error::UnsupportedDimension { .. } => {
                "lattice_geometry"
            }
            Error::Overflow { .. } | Error::DimensionMismatch { .. } => "laurent_algebra",
            Error::NoConvergence { .. } | Error::NearZeroDenominator { .. } => "mellin_core",
            Error::Domain(_) => "mellin_core",
            Error::PoleHit { .. } | Error::InvariantViolation(_) => "continuation",
            Error::SingularMatrix | Error::RepeatedRoot(_) | Error::Unsupported(_) => {
                "special_oracles"
            }
            Error::OnDiscriminant(_) => "gkz",
            Error::InvalidInput(_) => "cli",
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegeneratePolytope { .. } => "DegeneratePolytope",
            Error::UnsupportedDimension { .. } => "UnsupportedDimension",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Overflow { .. } => "Overflow",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Domain(_) => "DomainError",
            Error::PoleHit { .. } => "PoleHit",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::NearZeroDenominator { .. } => "NearZeroDenominator",
            Error::SingularMatrix => "SingularMatrix",
            Error::RepeatedRoot(_) => "RepeatedRoot",
            Error::Unsupported(_) => "Unsupported",
            Error::OnDiscriminant(_) => "OnDiscriminant",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
