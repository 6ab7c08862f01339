use thiserror::Error;

/// Errors raised by the geometry, spectral, source and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x1}, {x2}) lies on the focal segment")]
    DegeneratePoint { x1: f64, x2: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode {n} leaves the representable range (exponent {exponent:.1} > {limit:.1})")]
    OverflowGuard { n: usize, exponent: f64, limit: f64 },

    #[error("source at elliptic radius {rho0} is not outside the shell boundary {rho_e}")]
    SourceInsideShell { rho0: f64, rho_e: f64 },

    #[error("evaluation point coincides with a source singularity")]
    SingularPoint,

    #[error("need at least {needed} nonzero coefficients, found {found}")]
    TooFewCoefficients { needed: usize, found: usize },

    #[error("estimated series tail {tail:.3e} exceeds tolerance {tolerance:.1e} at n_max = {n_max}")]
    TruncationWarning { tail: f64, tolerance: f64, n_max: usize },

    #[error("curves overlap: minimum node distance {0:.3e}")]
    CurveOverlap(f64),

    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
