//! Root moduli of `theta(z) = 1 - theta_1 z - ... - theta_q z^q`.
//!
//! Used as an independent check on invertibility; the coordinate maps in
//! [`crate::reparam`] never call into this module.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{MaError, Result};
use crate::reparam::MaCoefficients;

const NEWTON_STEPS: usize = 8;
const SCHUR_ITERS_PER_ROW: usize = 100;

/// Roots of the MA polynomial, from the eigenvalues of its companion matrix
/// followed by a few Newton steps on the original polynomial.
pub fn ma_polynomial_roots(theta: &MaCoefficients) -> Result<Vec<Complex<f64>>> {
    let t = theta.as_slice();
    if t.iter().any(|c| !c.is_finite()) {
        return Err(MaError::NonFiniteInput);
    }
    let degree = match t.iter().rposition(|&c| c != 0.0) {
        Some(i) => i + 1,
        None => return Ok(Vec::new()),
    };

    // ascending coefficients c_0 .. c_d
    let mut poly = Vec::with_capacity(degree + 1);
    poly.push(1.0);
    poly.extend(t[..degree].iter().map(|c| -c));
    let lead = poly[degree];

    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for j in 0..degree {
        companion[(j, degree - 1)] = -poly[j] / lead;
    }

    let roots = eigenvalues(companion)?
        .iter()
        .map(|&r| polish(&poly, r))
        .collect();
    Ok(roots)
}

/// Francis QR can cycle without converging on exactly structured companion
/// matrices such as that of `z^6 - 1`, so the iteration is capped and, on
/// failure, retried after a fixed orthogonal similarity.
fn eigenvalues(companion: DMatrix<f64>) -> Result<DVector<Complex<f64>>> {
    let d = companion.nrows();
    let cap = SCHUR_ITERS_PER_ROW * d;
    if let Some(s) = Schur::try_new(companion.clone(), f64::EPSILON, cap) {
        return Ok(s.complex_eigenvalues());
    }
    for shift in 1..=3 {
        let v = DVector::from_fn(d, |i, _| 1.0 + ((i * shift) % (d + 1)) as f64);
        let h = DMatrix::identity(d, d) - (&v * v.transpose()) * (2.0 / v.norm_squared());
        if let Some(s) = Schur::try_new(&h * &companion * &h, f64::EPSILON, cap) {
            return Ok(s.complex_eigenvalues());
        }
    }
    Err(MaError::RootsDidNotConverge)
}

/// Smallest modulus among the roots; `+inf` for the constant polynomial.
pub fn min_root_modulus(theta: &MaCoefficients) -> Result<f64> {
    Ok(ma_polynomial_roots(theta)?
        .iter()
        .map(|r| r.norm())
        .fold(f64::INFINITY, f64::min))
}

fn polish(poly: &[f64], mut z: Complex<f64>) -> Complex<f64> {
    for _ in 0..NEWTON_STEPS {
        let (p, dp) = eval_with_derivative(poly, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let candidate = z - step;
        // keep the eigenvalue estimate if Newton stalls near a multiple root
        if eval_with_derivative(poly, candidate).0.norm() > p.norm() {
            break;
        }
        z = candidate;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

fn eval_with_derivative(poly: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in poly.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}
