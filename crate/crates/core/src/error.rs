use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not normalized: {0}")]
    NotNormalized(String),

    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("not an isometry (deviation {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("vectors are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("not a projection (deviation {deviation:.3e})")]
    NotAProjection { deviation: f64 },

    #[error("not stochastic: {0}")]
    NotStochastic(String),

    #[error("channel is not unital (deviation {deviation:.3e})")]
    NotUnital { deviation: f64 },

    #[error("no convergence after {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("projections too far apart: distance {distance:.6} >= {limit}")]
    TooFar { distance: f64, limit: f64 },

    #[error("spectral gap violated: {0}")]
    GapViolated(String),

    #[error("promise violated: measured {measured:.6e} exceeds supplied {supplied:.6e}")]
    PromiseViolated { measured: f64, supplied: f64 },

    #[error("family is not orthogonal (overlap {overlap:.3e})")]
    NotOrthogonalFamily { overlap: f64 },

    #[error("operator inequality violated (min eigenvalue {min_eigenvalue:.3e})")]
    OperatorInequalityViolated { min_eigenvalue: f64 },

    #[error("supports are not orthogonal (overlap {overlap:.3e})")]
    SupportsNotOrthogonal { overlap: f64 },

    #[error("dimension {d} is below the minimum {min}")]
    DimensionTooSmall { d: usize, min: usize },

    #[error("truncation left no Schmidt coefficients")]
    DegenerateTruncation,

    #[error("stochastic matrix too far from reference: {distance:.6} >= {limit:.6}")]
    TooFarFromT { distance: f64, limit: f64 },

    #[error("channel too far from reference: certificate {certificate:.6} > {limit:.6}")]
    TooFarFromNT { certificate: f64, limit: f64 },

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("claimed fact failed: {0}")]
    FactFailed(String),

    #[error("unknown suite {0:?}")]
    UnknownSuite(String),

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
