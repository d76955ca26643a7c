//! Nelder-Mead simplex search on a box, with every trial point projected
//! componentwise onto the box before it is evaluated.
//!
//! Projection (rather than a penalty) lets the search settle exactly on a
//! face of the box, which is where boundary estimates live.

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub lower: f64,
    pub upper: f64,
    /// Initial edge length along each axis.
    pub step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` over `[lower, upper]^d` starting from `x0`.
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let project = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(opts.lower, opts.upper);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.clone());
    for i in 0..d {
        let mut v = start.clone();
        v[i] = if v[i] + opts.step <= opts.upper {
            v[i] + opts.step
        } else {
            v[i] - opts.step
        };
        project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iters = 0;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=d).collect();
    while iters < opts.max_iters {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[d];
        let second_worst = order[d.saturating_sub(1)];

        if has_converged(&simplex, &values, best, worst, opts) {
            converged = true;
            break;
        }
        iters += 1;

        let mut centroid = vec![0.0; d];
        for &idx in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p);
            p
        };

        let reflected = along(REFLECT);
        let f_r = eval(&reflected);
        if f_r < values[best] {
            let expanded = along(EXPAND);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }

        let (contracted, f_c) = if f_r < values[worst] {
            let p = along(CONTRACT * REFLECT);
            let fc = eval(&p);
            (p, fc)
        } else {
            let p = along(-CONTRACT);
            let fc = eval(&p);
            (p, fc)
        };
        if f_c < values[worst].min(f_r) {
            simplex[worst] = contracted;
            values[worst] = f_c;
            continue;
        }

        let anchor = simplex[best].clone();
        for &idx in &order[1..] {
            let mut p: Vec<f64> = anchor
                .iter()
                .zip(&simplex[idx])
                .map(|(a, x)| a + SHRINK * (x - a))
                .collect();
            project(&mut p);
            values[idx] = eval(&p);
            simplex[idx] = p;
        }
    }

    let best = (0..=d)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexOutcome {
        x: simplex[best].clone(),
        f: values[best],
        iters,
        evals,
        converged,
    }
}

fn has_converged(
    simplex: &[Vec<f64>],
    values: &[f64],
    best: usize,
    worst: usize,
    opts: &SimplexOptions,
) -> bool {
    if !values[best].is_finite() {
        return false;
    }
    let spread = values[worst] - values[best];
    if !(spread <= opts.f_tol) {
        return false;
    }
    simplex.iter().all(|v| {
        v.iter()
            .zip(&simplex[best])
            .all(|(a, b)| (a - b).abs() <= opts.x_tol)
    })
}
