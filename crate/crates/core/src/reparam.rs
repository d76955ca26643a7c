//! Partial-autocorrelation style coordinates for MA(q) coefficients.
//!
//! The map `B` sends a point `zeta` of the closed cube `[-1, 1]^q` to the
//! coefficients `theta` of `theta(B) = 1 - theta_1 B - ... - theta_q B^q`.
//! The open cube maps one-to-one onto the invertible region and the faces of
//! the cube map onto its noninvertible boundary.
//!
//! Sign convention: the level-`k` step is
//! `theta_{i,k} = theta_{i,k-1} - zeta_k * theta_{k-i,k-1}` and its inverse is
//! `theta_{i,k-1} = (theta_{i,k} + zeta_k * theta_{k-i,k}) / (1 - zeta_k^2)`.
//! With this choice `B(z1, z2) = (z1 (1 - z2), z2)` and
//! `B(z1, 1, z3, z4) = (-z3 (z4 + 1), 1 - z4, z3 (z4 + 1), z4)`.

use serde::{Deserialize, Serialize};

use crate::error::{MaError, Result};

/// Default tolerance for declaring a coordinate to be on the boundary.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Guard band used by the pseudo-inverse: a level with `|zeta_k| >= 1 - EPS_DIV`
/// is treated as a boundary hit and every lower level is set to zero.
pub const EPS_DIV: f64 = 1e-12;

/// Moving-average coefficients `theta_1, ..., theta_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MaCoefficients(Vec<f64>);

impl MaCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(MaError::EmptyCoefficients);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(MaError::NonFiniteInput);
        }
        Ok(Self(coeffs))
    }

    /// All-zero coefficients of order `q` (white noise).
    pub fn zeros(q: usize) -> Result<Self> {
        Self::new(vec![0.0; q])
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for MaCoefficients {
    type Error = MaError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MaCoefficients> for Vec<f64> {
    fn from(c: MaCoefficients) -> Self {
        c.0
    }
}

/// A point `zeta` of the closed cube `[-1, 1]^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PartialParams(Vec<f64>);

impl PartialParams {
    pub fn new(zetas: Vec<f64>) -> Result<Self> {
        if zetas.is_empty() {
            return Err(MaError::EmptyCoefficients);
        }
        for (index, &value) in zetas.iter().enumerate() {
            if !value.is_finite() {
                return Err(MaError::NonFiniteInput);
            }
            if value.abs() > 1.0 {
                return Err(MaError::OutsideClosedCube { index, value });
            }
        }
        Ok(Self(zetas))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PartialParams {
    type Error = MaError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PartialParams> for Vec<f64> {
    fn from(p: PartialParams) -> Self {
        p.0
    }
}

/// Outcome of the boundary test `|1 - |zeta_i|| < epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub on_boundary: bool,
    pub flags: Vec<bool>,
    pub epsilon: f64,
}

/// Forward map `B`. The input is already known to lie in the closed cube.
pub fn b_transform(zeta: &PartialParams) -> MaCoefficients {
    MaCoefficients(forward(zeta.as_slice()))
}

/// Unchecked forward recursion, shared with the estimator's inner loop.
pub(crate) fn forward(zeta: &[f64]) -> Vec<f64> {
    let mut theta: Vec<f64> = Vec::with_capacity(zeta.len());
    let mut prev: Vec<f64> = Vec::with_capacity(zeta.len());
    for (k, &z) in zeta.iter().enumerate() {
        prev.clear();
        prev.extend_from_slice(&theta);
        for i in 0..k {
            theta[i] = prev[i] - z * prev[k - 1 - i];
        }
        theta.push(z);
    }
    theta
}

/// Pseudo-inverse `B^-` at the default boundary tolerance.
pub fn b_pseudo_inverse(theta: &MaCoefficients) -> Result<(PartialParams, BoundaryReport)> {
    b_pseudo_inverse_with(theta, DEFAULT_EPSILON)
}

/// Pseudo-inverse `B^-` of the closed invertible region.
///
/// Levels are peeled from `q` down to 1. Inside the region this is the exact
/// inverse of [`b_transform`]. Once some level reaches `|zeta_k| >= 1 - EPS_DIV`
/// all lower-level coefficients are set to zero, so boundary coefficients map
/// to a boundary point of the cube. Note that `B` is not one-to-one on the
/// boundary, and `B(B^-(theta))` can differ from `theta` there.
pub fn b_pseudo_inverse_with(
    theta: &MaCoefficients,
    epsilon: f64,
) -> Result<(PartialParams, BoundaryReport)> {
    if !(epsilon > 0.0) {
        return Err(MaError::InvalidEpsilon(epsilon));
    }
    let q = theta.order();
    let mut cur = theta.as_slice().to_vec();
    let mut next = vec![0.0; q];
    let mut zeta = vec![0.0; q];
    let mut hit = false;

    for k in (0..q).rev() {
        let z = cur[k];
        if z.abs() > 1.0 + EPS_DIV {
            return Err(MaError::NotInClosedRegion { level: k + 1, value: z.abs() });
        }
        zeta[k] = z.clamp(-1.0, 1.0);
        if k == 0 {
            break;
        }
        if hit || z.abs() >= 1.0 - EPS_DIV {
            hit = true;
            cur[..k].iter_mut().for_each(|c| *c = 0.0);
            continue;
        }
        let denom = 1.0 - z * z;
        for i in 0..k {
            next[i] = (cur[i] + z * cur[k - 1 - i]) / denom;
        }
        cur[..k].copy_from_slice(&next[..k]);
    }

    let zeta = PartialParams(zeta);
    let report = boundary_flags(&zeta, epsilon)?;
    Ok((zeta, report))
}

/// Flags every coordinate with `|1 - |zeta_i|| < epsilon`.
pub fn boundary_flags(zeta: &PartialParams, epsilon: f64) -> Result<BoundaryReport> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(MaError::InvalidEpsilon(epsilon));
    }
    let flags: Vec<bool> = zeta
        .as_slice()
        .iter()
        .map(|z| (1.0 - z.abs()).abs() < epsilon)
        .collect();
    Ok(BoundaryReport {
        on_boundary: flags.iter().any(|&f| f),
        flags,
        epsilon,
    })
}
