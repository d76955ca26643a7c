//! Exact Gaussian likelihood of a mean-zero MA(q) series.
//!
//! The innovation variance is profiled out: with one-step prediction errors
//! `e_t` and relative prediction variances `v_{t-1}` (unit innovation
//! variance), `sigma2_hat = n^-1 sum e_t^2 / v_{t-1}` and
//!
//! ```text
//! loglik = -(n/2) (ln(2 pi sigma2_hat) + 1) - (1/2) sum ln v_{t-1}
//! ```
//!
//! [`innovations_loglikelihood`] runs the innovations recursion on the banded
//! autocovariance in `O(n q^2)`. [`dense_loglikelihood`] factorizes the full
//! covariance matrix and exists to cross-check it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MaError, Result};
use crate::reparam::MaCoefficients;

/// Largest series the dense oracle accepts.
pub const DENSE_CAP: usize = 2000;

/// Observations `z_1, ..., z_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MaError::EmptySeries);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MaError::NonFiniteInput);
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Copy with the sample mean subtracted.
    pub fn demeaned(&self) -> Self {
        let m = self.mean();
        Self(self.0.iter().map(|v| v - m).collect())
    }

    pub fn is_all_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = MaError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(s: TimeSeries) -> Self {
        s.0
    }
}

/// `gamma_0, ..., gamma_m` at unit innovation variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovarianceSequence {
    pub gammas: Vec<f64>,
}

impl AutocovarianceSequence {
    /// `gamma_lag`, zero past the stored range.
    pub fn at(&self, lag: usize) -> f64 {
        self.gammas.get(lag).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodValue {
    pub concentrated_loglik: f64,
    pub sigma2_hat: f64,
    pub log_det_term: f64,
}

impl LikelihoodValue {
    fn from_parts(n: usize, weighted_ss: f64, log_det_term: f64) -> Result<Self> {
        let nf = n as f64;
        let sigma2_hat = weighted_ss / nf;
        if sigma2_hat <= 0.0 {
            return Err(MaError::ZeroSeries);
        }
        let concentrated_loglik =
            -0.5 * nf * ((2.0 * PI * sigma2_hat).ln() + 1.0) - 0.5 * log_det_term;
        Ok(Self {
            concentrated_loglik,
            sigma2_hat,
            log_det_term,
        })
    }
}

/// Autocovariances of `z_t = a_t - theta_1 a_{t-1} - ... - theta_q a_{t-q}`
/// with unit-variance `a_t`, for lags `0..=max_lag`.
pub fn ma_autocovariance(theta: &MaCoefficients, max_lag: usize) -> Result<AutocovarianceSequence> {
    let t = theta.as_slice();
    if t.iter().any(|c| !c.is_finite()) {
        return Err(MaError::NonFiniteInput);
    }
    let q = t.len();
    let psi = |j: usize| if j == 0 { 1.0 } else { -t[j - 1] };
    let gammas = (0..=max_lag)
        .map(|k| {
            if k > q {
                0.0
            } else {
                (0..=q - k).map(|j| psi(j) * psi(j + k)).sum()
            }
        })
        .collect();
    Ok(AutocovarianceSequence { gammas })
}

/// Output of the innovations recursion for one series length.
#[derive(Debug, Clone)]
pub struct Innovations {
    q: usize,
    /// Row `m` holds the predictor weights on the `q` most recent innovations.
    weights: Vec<f64>,
    /// Relative one-step prediction variances `v_0, ..., v_{n-1}`.
    pub variances: Vec<f64>,
}

impl Innovations {
    /// Runs the recursion for `n` steps on an MA(q) autocovariance.
    pub fn compute(theta: &MaCoefficients, n: usize) -> Result<Self> {
        let q = theta.order();
        let acov = ma_autocovariance(theta, q)?;
        let g = &acov.gammas;
        let mut weights = vec![0.0; n * q];
        let mut variances = Vec::with_capacity(n);
        if n == 0 {
            return Ok(Self { q, weights, variances });
        }
        variances.push(g[0]);

        for m in 1..n {
            let start = m.saturating_sub(q);
            for k in start..m {
                let mut s = g[m - k];
                for j in start..k {
                    s -= weights[k * q + (k - j - 1)] * weights[m * q + (m - j - 1)] * variances[j];
                }
                weights[m * q + (m - k - 1)] = s / variances[k];
            }
            let mut v = g[0];
            for j in start..m {
                let w = weights[m * q + (m - j - 1)];
                v -= w * w * variances[j];
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(MaError::DegenerateVariance { t: m, value: v });
            }
            variances.push(v);
        }
        Ok(Self { q, weights, variances })
    }

    /// Weight on the innovation `lag` steps back when predicting step `m`.
    pub fn weight(&self, m: usize, lag: usize) -> f64 {
        if lag == 0 || lag > self.q || lag > m {
            0.0
        } else {
            self.weights[m * self.q + (lag - 1)]
        }
    }
}

/// Exact concentrated log-likelihood via the innovations algorithm.
pub fn innovations_loglikelihood(z: &TimeSeries, theta: &MaCoefficients) -> Result<LikelihoodValue> {
    let x = z.values();
    let n = x.len();
    let q = theta.order();
    let inn = Innovations::compute(theta, n)?;

    let mut errors = vec![0.0; n];
    let mut weighted_ss = 0.0;
    let mut log_det = 0.0;
    for m in 0..n {
        let mut pred = 0.0;
        for lag in 1..=q.min(m) {
            pred += inn.weight(m, lag) * errors[m - lag];
        }
        let e = x[m] - pred;
        errors[m] = e;
        let v = inn.variances[m];
        weighted_ss += e * e / v;
        log_det += v.ln();
    }
    LikelihoodValue::from_parts(n, weighted_ss, log_det)
}

/// Same quantities as [`innovations_loglikelihood`] from a Cholesky factor of
/// the full `n x n` covariance matrix. Cubic cost; intended for verification.
pub fn dense_loglikelihood(z: &TimeSeries, theta: &MaCoefficients) -> Result<LikelihoodValue> {
    let n = z.len();
    if n > DENSE_CAP {
        return Err(MaError::SeriesTooLong { n, cap: DENSE_CAP });
    }
    let acov = ma_autocovariance(theta, n)?;
    let cov = DMatrix::from_fn(n, n, |i, j| acov.at(i.abs_diff(j)));
    let chol = cov.cholesky().ok_or(MaError::NotPositiveDefinite)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&DVector::from_column_slice(z.values()))
        .ok_or(MaError::NotPositiveDefinite)?;
    let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    LikelihoodValue::from_parts(n, y.norm_squared(), log_det)
}
