use mafit::estimator::{fit_ma, profile_curve, profile_curve_at, FitOptions};
use mafit::likelihood::{innovations_loglikelihood, TimeSeries};
use mafit::montecarlo::{simulate_ma, SimSpec};
use mafit::reparam::{b_transform, boundary_flags, MaCoefficients, PartialParams};
use mafit::roots::min_root_modulus;

fn ma1_series(theta: f64, n: usize, seed: u64) -> TimeSeries {
    simulate_ma(&SimSpec::new(MaCoefficients::new(vec![theta]).unwrap(), n, seed)).unwrap()
}

/// Argmax of the MA(1) likelihood over zeta in {-1, -0.999, ..., 1}.
fn grid_oracle(z: &TimeSeries) -> (f64, f64) {
    (0..=2000)
        .map(|k| {
            let t = -1.0 + k as f64 * 1e-3;
            let ll = innovations_loglikelihood(z, &MaCoefficients::new(vec![t]).unwrap())
                .unwrap()
                .concentrated_loglik;
            (t, ll)
        })
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[test]
fn ma1_fit_matches_grid_oracle() {
    for (i, theta) in [-0.9, 0.0, 0.9].into_iter().enumerate() {
        for r in 0..10 {
            let z = ma1_series(theta, 25, 1000 * i as u64 + r);
            let fit = fit_ma(&z, &FitOptions::new(1)).unwrap();
            let (arg, best) = grid_oracle(&z);
            assert!(fit.loglik >= best - 1e-6, "theta {theta} rep {r}");
            assert!((fit.zeta_hat.as_slice()[0] - arg).abs() <= 1e-3, "theta {theta} rep {r}");
        }
    }
}

#[test]
fn feasible_and_consistent() {
    for seed in 0..20 {
        let z = ma1_series(0.6, 25, seed);
        for q in 1..=4 {
            let fit = fit_ma(&z, &FitOptions::new(q).with_seed(seed)).unwrap();
            assert!(fit.zeta_hat.as_slice().iter().all(|v| v.abs() <= 1.0));
            assert_eq!(fit.theta_hat, b_transform(&fit.zeta_hat));
            assert_eq!(fit.boundary, boundary_flags(&fit.zeta_hat, 1e-6).unwrap());
            let m = min_root_modulus(&fit.theta_hat).unwrap();
            assert_eq!(fit.boundary.on_boundary, (m - 1.0).abs() < 1e-4, "{fit:?} modulus {m}");
        }
    }
}

#[test]
fn loglik_nondecreasing_in_order() {
    for seed in 0..15 {
        let z = ma1_series(-0.3, 50, 500 + seed);
        let mut prev = f64::NEG_INFINITY;
        for q in 1..=4 {
            let ll = fit_ma(&z, &FitOptions::new(q)).unwrap().loglik;
            assert!(ll >= prev - 1e-6, "seed {seed} q {q}: {ll} < {prev}");
            prev = ll;
        }
    }
}

#[test]
fn fit_is_deterministic() {
    let z = ma1_series(0.3, 50, 9);
    let opts = FitOptions::new(3).with_seed(4);
    assert_eq!(fit_ma(&z, &opts).unwrap(), fit_ma(&z, &opts).unwrap());
}

#[test]
fn unit_root_series_lands_exactly_on_face() {
    // an overdifferenced white noise series has a unit MA root by construction
    let w = ma1_series(0.0, 61, 77);
    let diff: Vec<f64> = w.values().windows(2).map(|p| p[1] - p[0]).collect();
    let z = TimeSeries::new(diff).unwrap();
    let fit = fit_ma(&z, &FitOptions::new(1)).unwrap();
    if fit.boundary.on_boundary {
        assert!((fit.zeta_hat.as_slice()[0] - 1.0).abs() < 1e-6);
    }
    assert!(fit.zeta_hat.as_slice()[0] > 0.8);
}

#[test]
fn profile_argmax_matches_fit() {
    let z = ma1_series(0.9, 25, 31);
    let grid: Vec<f64> = (0..=2000).map(|k| -1.0 + k as f64 * 1e-3).collect();
    let curve = profile_curve(&z, &FitOptions::new(1), 0, &grid).unwrap();
    let (arg, _) = curve
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let fit = fit_ma(&z, &FitOptions::new(1)).unwrap();
    assert!((fit.zeta_hat.as_slice()[0] - arg).abs() <= 1e-3);
}

#[test]
fn profile_is_continuous_in_second_coordinate() {
    let z = ma1_series(0.5, 40, 8);
    let base = PartialParams::new(vec![0.3, 0.0]).unwrap();
    let grid: Vec<f64> = (0..=200).map(|k| -1.0 + k as f64 * 0.01).collect();
    let curve = profile_curve_at(&z, &base, 1, &grid).unwrap();
    assert_eq!(curve.len(), 201);
    let max_jump = curve.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max);
    assert!(max_jump < 1.0, "jump {max_jump}");
}
