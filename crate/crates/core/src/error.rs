use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: input validation (shapes, Hermiticity,
/// positivity, normalization, weights) and numerical-domain failures
/// (vanishing post-selection probability, grid truncation and similar).
/// [`Error::is_numerical_domain`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max |m - m†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("amplitudes have squared norm {norm_sqr}, expected 1")]
    NotNormalized { norm_sqr: f64 },

    #[error("matrix is not unitary (max |u†u - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("channel has no Kraus elements")]
    EmptyChannel,

    #[error("channel has no nonzero Kraus element with positive weight")]
    ZeroChannel,

    #[error("Kraus element {index} has negative weight {weight}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("incompatible boundary conditions: normalization {denominator:e} vanishes")]
    IncompatibleBoundary { denominator: f64 },

    #[error("correlation has imaginary residual {residual:e}")]
    ImaginaryResidual { residual: f64 },

    #[error("pointer grid truncates {mass:e} of the probability mass")]
    GridTruncation { mass: f64 },

    #[error("discretized pointer density has negative value {value:e} (peak {peak:e})")]
    NegativeDensity { value: f64, peak: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerical domain rather than of the input.
    pub fn is_numerical_domain(&self) -> bool {
        matches!(
            self,
            Error::IncompatibleBoundary { .. }
                | Error::ImaginaryResidual { .. }
                | Error::GridTruncation { .. }
                | Error::NegativeDensity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
