//! Seeded MA(q) simulation and the boundary-frequency experiment.
//!
//! Every (n, theta_1, replication) unit draws its series from its own
//! generator, seeded from a hash of the master seed and the unit's grid
//! position, so results do not depend on scheduling or thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MaError, Result};
use crate::estimator::{fit_ma, FitOptions};
use crate::likelihood::TimeSeries;
use crate::reparam::{MaCoefficients, DEFAULT_EPSILON};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub theta: MaCoefficients,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(theta: MaCoefficients, n: usize, seed: u64) -> Self {
        Self {
            theta,
            sigma: 1.0,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(MaError::EmptySeries);
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(MaError::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Draws `z_t = a_t - sum_i theta_i a_{t-i}` for `t = 1..n`, using `n + q`
/// Gaussian innovations `a_{1-q}, ..., a_n`.
pub fn simulate_ma(spec: &SimSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let theta = spec.theta.as_slice();
    let q = theta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shocks: Vec<f64> = (0..spec.n + q)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            spec.sigma * a
        })
        .collect();
    let values = (q..spec.n + q)
        .map(|t| {
            theta
                .iter()
                .enumerate()
                .fold(shocks[t], |acc, (i, th)| acc - th * shocks[t - i - 1])
        })
        .collect();
    TimeSeries::new(values)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Seed of the simulated series for one replication of one grid cell.
pub fn replication_seed(master_seed: u64, n: usize, theta_index: usize, replication: usize) -> u64 {
    mix(&[master_seed, 0x5349_4d55, n as u64, theta_index as u64, replication as u64])
}

/// Seed for the random optimizer restarts of one fit.
pub fn fit_seed(series_seed: u64, q: usize) -> u64 {
    mix(&[series_seed, 0x4649_5400, q as u64])
}

fn default_n_values() -> Vec<usize> {
    vec![25, 50]
}

fn default_theta1_values() -> Vec<f64> {
    vec![-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9]
}

fn default_q_values() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_replications() -> usize {
    100
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_n_starts() -> usize {
    5
}

fn default_f_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_theta1_values")]
    pub theta1_values: Vec<f64>,
    #[serde(default = "default_q_values")]
    pub q_values: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_n_starts")]
    pub n_starts: usize,
    #[serde(default = "default_f_tol")]
    pub f_tol: f64,
    /// Per-start iteration cap; `1000 q` when absent.
    #[serde(default)]
    pub max_iters: Option<usize>,
    /// Worker threads; the global rayon pool when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
            theta1_values: default_theta1_values(),
            q_values: default_q_values(),
            replications: default_replications(),
            epsilon: default_epsilon(),
            master_seed: 0,
            n_starts: default_n_starts(),
            f_tol: default_f_tol(),
            max_iters: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MaError::InvalidConfig(m.to_string()));
        if self.n_values.is_empty() || self.theta1_values.is_empty() || self.q_values.is_empty() {
            return bad("n_values, theta1_values and q_values must be non-empty");
        }
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.theta1_values.iter().any(|t| !t.is_finite() || t.abs() >= 1.0) {
            return bad("theta1_values must lie strictly inside (-1, 1)");
        }
        if self.q_values.iter().any(|&q| q == 0) {
            return bad("q_values must be at least 1");
        }
        let max_q = self.q_values.iter().copied().max().unwrap_or(1);
        if self.n_values.iter().any(|&n| n <= max_q) {
            return bad("every n must exceed the largest fitted order");
        }
        if matches!(self.threads, Some(0)) {
            return bad("threads must be at least 1");
        }
        self.fit_options(1, 0).validate()
    }

    pub fn fit_options(&self, q: usize, seed: u64) -> FitOptions {
        let mut opts = FitOptions::new(q).with_seed(seed);
        opts.epsilon = self.epsilon;
        opts.n_starts = self.n_starts;
        opts.f_tol = self.f_tol;
        if let Some(m) = self.max_iters {
            opts.max_iters = m;
        }
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub theta1: f64,
    pub q: usize,
    /// `count / (reps - failures)`.
    pub prop_boundary: f64,
    pub count: usize,
    pub reps: usize,
    pub failures: usize,
    pub mean_fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub software: String,
    pub version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    pub provenance: Provenance,
}

#[derive(Serialize)]
struct CsvRow {
    n: usize,
    theta1: f64,
    q: usize,
    prop_boundary: f64,
    count: usize,
    reps: usize,
    failures: usize,
}

/// Column order of [`ExperimentReport::write_csv`].
pub const CSV_COLUMNS: [&str; 7] = ["n", "theta1", "q", "prop_boundary", "count", "reps", "failures"];

impl ExperimentReport {
    pub fn cell(&self, n: usize, theta1: f64, q: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.q == q && (c.theta1 - theta1).abs() < 1e-12)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| MaError::InvalidConfig(format!("csv write failed: {e}"));
        for c in &self.cells {
            w.serialize(CsvRow {
                n: c.n,
                theta1: c.theta1,
                q: c.q,
                prop_boundary: c.prop_boundary,
                count: c.count,
                reps: c.reps,
                failures: c.failures,
            })
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| MaError::InvalidConfig(format!("csv write failed: {e}")))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Wide layout: one row per (n, theta_1), one column per fitted order.
    pub fn render_table(&self) -> String {
        let cfg = &self.provenance.config;
        let mut s = format!("{:>5} {:>7}", "n", "theta1");
        for q in &cfg.q_values {
            s.push_str(&format!(" {:>7}", format!("MA({q})")));
        }
        s.push('\n');
        for &n in &cfg.n_values {
            for &t in &cfg.theta1_values {
                s.push_str(&format!("{n:>5} {t:>7.1}"));
                for &q in &cfg.q_values {
                    match self.cell(n, t, q) {
                        Some(c) => s.push_str(&format!(" {:>7.2}", c.prop_boundary)),
                        None => s.push_str(&format!(" {:>7}", "-")),
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

struct UnitOutcome {
    /// `Some(on_boundary)` per fitted order, `None` when the fit failed.
    boundary: Vec<Option<bool>>,
    seconds: Vec<f64>,
}

fn run_unit(cfg: &ExperimentConfig, n: usize, theta_index: usize, rep: usize) -> Result<UnitOutcome> {
    let seed = replication_seed(cfg.master_seed, n, theta_index, rep);
    let theta = MaCoefficients::new(vec![cfg.theta1_values[theta_index]])?;
    let z = simulate_ma(&SimSpec::new(theta, n, seed))?;
    let mut boundary = Vec::with_capacity(cfg.q_values.len());
    let mut seconds = Vec::with_capacity(cfg.q_values.len());
    for &q in &cfg.q_values {
        let started = Instant::now();
        let fit = fit_ma(&z, &cfg.fit_options(q, fit_seed(seed, q)));
        seconds.push(started.elapsed().as_secs_f64());
        boundary.push(fit.ok().map(|f| f.boundary.on_boundary));
    }
    Ok(UnitOutcome { boundary, seconds })
}

/// Runs the full grid and tabulates boundary proportions per (n, theta_1, q).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_progress(cfg, |_, _| {})
}

/// As [`run_experiment`], calling `progress(done, total)` as units finish.
pub fn run_experiment_with_progress<P>(cfg: &ExperimentConfig, progress: P) -> Result<ExperimentReport>
where
    P: Fn(usize, usize) + Sync,
{
    cfg.validate()?;
    let units: Vec<(usize, usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| {
            (0..cfg.theta1_values.len())
                .flat_map(move |ti| (0..cfg.replications).map(move |r| (n, ti, r)))
        })
        .collect();
    let total = units.len();
    let done = std::sync::atomic::AtomicUsize::new(0);

    let work = || -> Result<Vec<UnitOutcome>> {
        units
            .par_iter()
            .map(|&(n, ti, r)| {
                let out = run_unit(cfg, n, ti, r);
                let d = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                progress(d, total);
                out
            })
            .collect()
    };
    let outcomes = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| MaError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    // (n, theta index, q index) -> (count, failures, seconds)
    let mut tally: BTreeMap<(usize, usize, usize), (usize, usize, f64)> = BTreeMap::new();
    for (&(n, ti, _), out) in units.iter().zip(&outcomes) {
        for (qi, (b, s)) in out.boundary.iter().zip(&out.seconds).enumerate() {
            let e = tally.entry((n, ti, qi)).or_insert((0, 0, 0.0));
            match b {
                Some(true) => e.0 += 1,
                Some(false) => {}
                None => e.1 += 1,
            }
            e.2 += s;
        }
    }

    let mut cells = Vec::with_capacity(tally.len());
    for &n in &cfg.n_values {
        for (ti, &theta1) in cfg.theta1_values.iter().enumerate() {
            for (qi, &q) in cfg.q_values.iter().enumerate() {
                let (count, failures, secs) = tally.get(&(n, ti, qi)).copied().unwrap_or_default();
                let reps = cfg.replications;
                let fitted = reps - failures;
                cells.push(CellResult {
                    n,
                    theta1,
                    q,
                    prop_boundary: if fitted == 0 { 0.0 } else { count as f64 / fitted as f64 },
                    count,
                    reps,
                    failures,
                    mean_fit_seconds: secs / reps as f64,
                });
            }
        }
    }

    Ok(ExperimentReport {
        cells,
        provenance: Provenance {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.master_seed,
            config: cfg.clone(),
        },
    })
}
