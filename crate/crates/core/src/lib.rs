//! Exact maximum likelihood estimation of MA(q) models over the closed
//! invertible region, including noninvertible boundary estimates.
//!
//! The estimator searches the cube `[-1, 1]^q` of partial-autocorrelation
//! style coordinates ([`reparam`]), evaluates the exact Gaussian likelihood
//! with the innovations algorithm ([`likelihood`]), and flags estimates that
//! land on a face of the cube as boundary estimates.

pub mod cli;


pub mod error;
pub mod estimator;
pub mod likelihood;
pub mod montecarlo;
pub mod reparam;
pub mod roots;
pub mod simplex;

pub use error::{MaError, Result};
pub use estimator::{fit_ma, profile_curve, profile_curve_at, FitOptions, FitResult};
pub use likelihood::{
    dense_loglikelihood, innovations_loglikelihood, ma_autocovariance, AutocovarianceSequence,
    LikelihoodValue, TimeSeries,
};
pub use montecarlo::{run_experiment, simulate_ma, ExperimentConfig, ExperimentReport, SimSpec};
pub use reparam::{
    b_pseudo_inverse, b_pseudo_inverse_with, b_transform, boundary_flags, BoundaryReport,
    MaCoefficients, PartialParams, DEFAULT_EPSILON,
};
pub use roots::min_root_modulus;
