use thiserror::Error;

pub type Result<T> = std::result::Result<T, MaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaError {
    #[error("input contains a non-finite value")]
    NonFiniteInput,

    #[error("model order must be at least 1")]
    EmptyCoefficients,

    #[error("zeta[{index}] = {value} lies outside the closed unit cube")]
    OutsideClosedCube { index: usize, value: f64 },

    #[error("coefficients are outside the closed invertible region (|zeta_{level}| = {value})")]
    NotInClosedRegion { level: usize, value: f64 },

    #[error("boundary tolerance must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("time series is empty")]
    EmptySeries,

    #[error("prediction variance v[{t}] = {value} is not positive")]
    DegenerateVariance { t: usize, value: f64 },

    #[error("innovation variance estimate is zero (series is identically zero)")]
    ZeroSeries,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("series of length {n} exceeds the dense oracle cap of {cap}")]
    SeriesTooLong { n: usize, cap: usize },

    #[error("series of length {n} is too short for an MA({q}) fit")]
    TooShortSeries { n: usize, q: usize },

    #[error("every optimizer start failed to produce a finite likelihood")]
    AllStartsFailed,

    #[error("coordinate {index} is out of range for order {q}")]
    IndexOutOfRange { index: usize, q: usize },

    #[error("eigenvalue iteration did not converge")]
    RootsDidNotConverge,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
