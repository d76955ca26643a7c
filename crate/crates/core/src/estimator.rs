//! Maximum likelihood over the closed invertible region.
//!
//! The concentrated likelihood is maximized in the `zeta` coordinates over the
//! closed cube `[-1, 1]^q` with a projected simplex search and several starts.
//! Estimates with some `|zeta_i| = 1` are legitimate outcomes and are reported
//! through the boundary flags.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MaError, Result};
use crate::likelihood::{innovations_loglikelihood, LikelihoodValue, TimeSeries};
use crate::reparam::{
    b_transform, boundary_flags, forward, BoundaryReport, MaCoefficients, PartialParams,
    DEFAULT_EPSILON,
};
use crate::simplex::{self, SimplexOptions};

/// Two restarts whose log-likelihoods differ by less than this are a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

const INITIAL_STEP: f64 = 0.2;
const POLISH_STEP: f64 = 0.02;
const POLISH_ROUNDS: usize = 4;
/// Coordinates this close to a face are tried exactly on the face.
const SNAP_BAND: f64 = 1e-3;
const RANDOM_START_RANGE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub q: usize,
    pub epsilon: f64,
    pub n_starts: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(q: usize) -> Self {
        Self {
            q,
            epsilon: DEFAULT_EPSILON,
            n_starts: 5,
            f_tol: 1e-9,
            x_tol: 1e-8,
            max_iters: 1000 * q.max(1),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(MaError::EmptyCoefficients);
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(MaError::InvalidEpsilon(self.epsilon));
        }
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(MaError::InvalidConfig(
                "n_starts and max_iters must be positive".into(),
            ));
        }
        if !(self.f_tol > 0.0) || !(self.x_tol > 0.0) {
            return Err(MaError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub zeta_hat: PartialParams,
    pub theta_hat: MaCoefficients,
    pub sigma2_hat: f64,
    pub loglik: f64,
    pub boundary: BoundaryReport,
    pub converged: bool,
    pub n_evals: usize,
    pub start_index: usize,
}

fn objective(z: &TimeSeries, zeta: &[f64]) -> f64 {
    let theta = match MaCoefficients::new(forward(zeta)) {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    match innovations_loglikelihood(z, &theta) {
        Ok(lv) => -lv.concentrated_loglik,
        Err(_) => f64::INFINITY,
    }
}

/// Concentrated log-likelihood at a point of the closed cube.
pub fn loglik_at(z: &TimeSeries, zeta: &PartialParams) -> Result<LikelihoodValue> {
    innovations_loglikelihood(z, &b_transform(zeta))
}

/// Start points: the origin, then `+-0.5 e_k`, then seeded uniform draws.
pub fn start_points(q: usize, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; q]];
    for k in 0..q {
        for sign in [0.5, -0.5] {
            let mut p = vec![0.0; q];
            p[k] = sign;
            points.push(p);
        }
    }
    points.truncate(n_starts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < n_starts {
        points.push(
            (0..q)
                .map(|_| rng.random_range(-RANDOM_START_RANGE..=RANDOM_START_RANGE))
                .collect(),
        );
    }
    points
}

struct StartOutcome {
    x: Vec<f64>,
    f: f64,
    evals: usize,
    converged: bool,
}

fn run_start(z: &TimeSeries, x0: &[f64], opts: &FitOptions) -> StartOutcome {
    let mut evals = 0;
    let mut iters_left = opts.max_iters;
    let mut sopts = SimplexOptions {
        lower: -1.0,
        upper: 1.0,
        step: INITIAL_STEP,
        f_tol: opts.f_tol,
        x_tol: opts.x_tol,
        max_iters: iters_left,
    };

    let first = simplex::minimize(|x| objective(z, x), x0, &sopts);
    evals += first.evals;
    iters_left = iters_left.saturating_sub(first.iters);
    let mut x = first.x;
    let mut f = first.f;
    let mut converged = first.converged;

    // A simplex can collapse onto a face early; restart it around the best
    // point and try coordinates near a face exactly on that face.
    for _ in 0..POLISH_ROUNDS {
        let mut improved = false;
        for i in 0..x.len() {
            let gap = 1.0 - x[i].abs();
            if gap > 0.0 && gap < SNAP_BAND {
                sopts.step = POLISH_STEP;
                sopts.max_iters = iters_left;
                let face = best_on_face(z, &x, i, &sopts);
                evals += face.evals;
                iters_left = iters_left.saturating_sub(face.iters);
                if face.f <= f {
                    improved |= face.f < f - opts.f_tol;
                    x = face.x;
                    f = face.f;
                }
            }
        }
        if iters_left == 0 || !f.is_finite() {
            break;
        }
        sopts.step = POLISH_STEP;
        sopts.max_iters = iters_left;
        let polished = simplex::minimize(|p| objective(z, p), &x, &sopts);
        evals += polished.evals;
        iters_left = iters_left.saturating_sub(polished.iters);
        converged = polished.converged;
        // leaving a face must pay for itself by more than the tolerance
        let leaves_face = x
            .iter()
            .zip(&polished.x)
            .any(|(a, b)| a.abs() == 1.0 && b.abs() != 1.0);
        let margin = if leaves_face { opts.f_tol } else { 0.0 };
        if polished.f < f - margin {
            improved |= polished.f < f - opts.f_tol;
            x = polished.x;
            f = polished.f;
        }
        if !improved {
            break;
        }
    }

    StartOutcome {
        x,
        f,
        evals,
        converged,
    }
}

/// Pins coordinate `i` to the nearest face and re-optimizes the others.
fn best_on_face(z: &TimeSeries, x: &[f64], i: usize, sopts: &SimplexOptions) -> simplex::SimplexOutcome {
    let face = x[i].signum();
    let mut pinned = x.to_vec();
    pinned[i] = face;
    let f_pinned = objective(z, &pinned);
    if x.len() == 1 || sopts.max_iters == 0 {
        return simplex::SimplexOutcome {
            x: pinned,
            f: f_pinned,
            iters: 0,
            evals: 1,
            converged: true,
        };
    }
    let expand = |free: &[f64]| {
        let mut full = Vec::with_capacity(free.len() + 1);
        full.extend_from_slice(&free[..i]);
        full.push(face);
        full.extend_from_slice(&free[i..]);
        full
    };
    let free: Vec<f64> = x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
    let mut out = simplex::minimize(|p| objective(z, &expand(p)), &free, sopts);
    out.evals += 1;
    if f_pinned <= out.f {
        out.x = pinned;
        out.f = f_pinned;
    } else {
        out.x = expand(&out.x);
    }
    out
}

/// Fits an MA(q) model by exact maximum likelihood over the closed region.
pub fn fit_ma(z: &TimeSeries, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let n = z.len();
    if n <= opts.q {
        return Err(MaError::TooShortSeries { n, q: opts.q });
    }
    if z.is_all_zero() {
        return Err(MaError::ZeroSeries);
    }

    let mut best: Option<(usize, StartOutcome)> = None;
    let mut total_evals = 0;
    for (index, x0) in start_points(opts.q, opts.n_starts, opts.seed).iter().enumerate() {
        let outcome = run_start(z, x0, opts);
        total_evals += outcome.evals;
        if !outcome.f.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            // minimizing -loglik
            Some((_, b)) => outcome.f < b.f - TIE_TOLERANCE,
        };
        if better {
            best = Some((index, outcome));
        }
    }

    let (start_index, winner) = best.ok_or(MaError::AllStartsFailed)?;
    let zeta_hat = PartialParams::new(winner.x)?;
    let theta_hat = b_transform(&zeta_hat);
    let lv = innovations_loglikelihood(z, &theta_hat)?;
    let boundary = boundary_flags(&zeta_hat, opts.epsilon)?;
    Ok(FitResult {
        zeta_hat,
        theta_hat,
        sigma2_hat: lv.sigma2_hat,
        loglik: lv.concentrated_loglik,
        boundary,
        converged: winner.converged,
        n_evals: total_evals,
        start_index,
    })
}

/// Concentrated log-likelihood along one coordinate of `base`, with the other
/// coordinates held fixed.
pub fn profile_curve_at(
    z: &TimeSeries,
    base: &PartialParams,
    coordinate: usize,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let q = base.order();
    if coordinate >= q {
        return Err(MaError::IndexOutOfRange {
            index: coordinate,
            q,
        });
    }
    let mut point = base.as_slice().to_vec();
    grid.iter()
        .map(|&g| {
            point[coordinate] = g;
            let zeta = PartialParams::new(point.clone())?;
            Ok((g, loglik_at(z, &zeta)?.concentrated_loglik))
        })
        .collect()
}

/// Fits the model, then profiles the log-likelihood along `coordinate` with
/// the remaining coordinates at their fitted values.
pub fn profile_curve(
    z: &TimeSeries,
    opts: &FitOptions,
    coordinate: usize,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if coordinate >= opts.q {
        return Err(MaError::IndexOutOfRange {
            index: coordinate,
            q: opts.q,
        });
    }
    let fit = fit_ma(z, opts)?;
    profile_curve_at(z, &fit.zeta_hat, coordinate, grid)
}
