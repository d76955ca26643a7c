use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mafit::cli::{format_series, EXIT_BOUNDARY, EXIT_NOT_IN_REGION, EXIT_OK, EXIT_TOO_SHORT, EXIT_USAGE};
use mafit::estimator::{fit_ma, FitOptions};
use mafit::likelihood::{innovations_loglikelihood, TimeSeries};
use mafit::montecarlo::{simulate_ma, SimSpec};
use mafit::reparam::MaCoefficients;
use serde_json::Value;

fn mafit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mafit"))
        .args(args)
        .env_remove("MAFIT_THREADS")
        .output()
        .expect("run mafit")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn floats(v: &Value) -> Vec<f64> {
    serde_json::from_value(v.clone()).unwrap()
}

fn write_series(path: &Path, z: &TimeSeries) {
    fs::write(path, format_series(z)).unwrap();
}

#[test]
fn transform_forward_and_inverse() {
    let out = mafit(&["transform", "--direction", "forward", "--values", "0.5,0.2"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let theta = floats(&json(&out)["result"]["theta"]);
    assert!((theta[0] - 0.4).abs() < 1e-15 && theta[1] == 0.2);

    let out = mafit(&["transform", "--direction", "inverse", "--values", "0.4,0.6"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let doc = json(&out);
    let zeta = floats(&doc["result"]["zeta"]);
    assert!((zeta[0] - 1.0).abs() < 1e-14 && (zeta[1] - 0.6).abs() < 1e-15);
    assert_eq!(doc["result"]["boundary"]["on_boundary"], Value::Bool(true));
    assert_eq!(doc["tool"], "mafit");
}

#[test]
fn transform_errors() {
    let out = mafit(&["transform", "--direction", "forward", "--values", "1.5"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let out = mafit(&["transform", "--direction", "inverse", "--values", "0.2,-1.3"]);
    assert_eq!(out.status.code(), Some(EXIT_NOT_IN_REGION));

    let out = mafit(&["transform", "--direction", "sideways", "--values", "0.1"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn fit_reports_and_signals_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let theta = MaCoefficients::new(vec![0.9]).unwrap();
    let mut seen = [false; 2];
    for seed in 0..40 {
        let z = simulate_ma(&SimSpec::new(theta.clone(), 25, seed)).unwrap();
        let path = dir.path().join(format!("s{seed}.csv"));
        write_series(&path, &z);
        let out = mafit(&["fit", "--input", path.to_str().unwrap(), "--q", "1"]);
        let doc = json(&out);
        let on = doc["result"]["boundary"]["on_boundary"].as_bool().unwrap();
        let want = if on { EXIT_BOUNDARY } else { EXIT_OK };
        assert_eq!(out.status.code(), Some(want));
        seen[on as usize] = true;

        // the document mirrors the library fit
        let lib = fit_ma(&z, &FitOptions::new(1)).unwrap();
        assert_eq!(floats(&doc["result"]["zeta_hat"]), lib.zeta_hat.as_slice());
        assert_eq!(doc["result"]["loglik"].as_f64().unwrap(), lib.loglik);
        if seen[0] && seen[1] && seed > 5 {
            break;
        }
    }
    assert!(seen[0] && seen[1], "expected both boundary and interior fits");
}

#[test]
fn fit_agrees_with_grid_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let z = simulate_ma(&SimSpec::new(MaCoefficients::new(vec![-0.6]).unwrap(), 25, 99)).unwrap();
    let path = dir.path().join("s.csv");
    write_series(&path, &z);
    let out = mafit(&["fit", "--input", path.to_str().unwrap(), "--q", "1", "--seed", "3"]);
    let fitted = floats(&json(&out)["result"]["theta_hat"])[0];
    let (arg, _) = (0..=2000)
        .map(|k| {
            let t = -1.0 + k as f64 * 1e-3;
            let m = MaCoefficients::new(vec![t]).unwrap();
            (t, innovations_loglikelihood(&z, &m).unwrap().concentrated_loglik)
        })
        .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    assert!((fitted - arg).abs() <= 1e-3);
}

#[test]
fn fit_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = dir.path().join("zeros.csv");
    fs::write(&zeros, "0\n".repeat(10)).unwrap();
    assert_eq!(mafit(&["fit", "--input", zeros.to_str().unwrap(), "--q", "1"]).status.code(), Some(EXIT_USAGE));

    let one = dir.path().join("one.csv");
    fs::write(&one, "z\n1.5\n").unwrap();
    assert_eq!(mafit(&["fit", "--input", one.to_str().unwrap(), "--q", "1"]).status.code(), Some(EXIT_TOO_SHORT));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1\nNaN\n2\n").unwrap();
    assert_eq!(mafit(&["fit", "--input", bad.to_str().unwrap(), "--q", "1"]).status.code(), Some(EXIT_USAGE));

    let missing = dir.path().join("missing.csv");
    assert_eq!(mafit(&["fit", "--input", missing.to_str().unwrap(), "--q", "1"]).status.code(), Some(EXIT_USAGE));

    // constant series: rejected only after demeaning
    let constant = dir.path().join("constant.csv");
    fs::write(&constant, "2\n".repeat(10)).unwrap();
    let c = constant.to_str().unwrap();
    assert_eq!(mafit(&["fit", "--input", c, "--q", "1", "--demean"]).status.code(), Some(EXIT_USAGE));
    assert!(matches!(mafit(&["fit", "--input", c, "--q", "1"]).status.code(), Some(EXIT_OK) | Some(EXIT_BOUNDARY)));
}

#[test]
fn simulate_writes_raw_innovations_for_white_noise() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = mafit(&["simulate", "--theta", "0", "--n", "5", "--seed", "42", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(EXIT_OK));
        assert_eq!(json(&out)["result"]["rows"], 5);
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());

    let text = String::from_utf8(bytes).unwrap();
    let rows: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let lib = simulate_ma(&SimSpec::new(MaCoefficients::new(vec![0.0]).unwrap(), 5, 42)).unwrap();
    assert_eq!(rows, lib.values());
}

#[test]
fn simulate_long_series_moments() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("long.csv");
    let out = mafit(&["simulate", "--theta", "0.5", "--n", "100000", "--seed", "8", "--output", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let z = mafit::cli::read_series(&p).unwrap();
    let n = z.len() as f64;
    let var = z.values().iter().map(|v| v * v).sum::<f64>() / n;
    let se = (2.0 * (1.25f64.powi(2) + 2.0 * 0.25) / n).sqrt();
    assert!((var - 1.25).abs() < 3.0 * se, "variance {var}");
}

#[test]
fn simulate_rejects_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    let p = p.to_str().unwrap();
    assert_eq!(mafit(&["simulate", "--theta", "0.5", "--n", "0", "--output", p]).status.code(), Some(EXIT_USAGE));
    assert_eq!(mafit(&["simulate", "--theta", "0.5", "--n", "5", "--sigma", "-1", "--output", p]).status.code(), Some(EXIT_USAGE));
    let unwritable = dir.path().join("no/such/dir/x.csv");
    assert_eq!(
        mafit(&["simulate", "--theta", "0.5", "--n", "5", "--output", unwritable.to_str().unwrap()]).status.code(),
        Some(EXIT_USAGE)
    );
}

#[test]
fn experiment_default_grid_has_56_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let out = mafit(&["experiment", "--replications", "1", "--quiet", "--output", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let csv = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,theta1,q,prop_boundary,count,reps,failures"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 56);
    for r in rows {
        let p: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!(p == 0.0 || p == 1.0);
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 56);
    assert_eq!(report["provenance"]["config"]["replications"], 1);
}

#[test]
fn experiment_config_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(
        &cfg,
        "n_values = [25]\ntheta1_values = [0.6]\nq_values = [1, 2]\nreplications = 6\nmaster_seed = 77\n",
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let d = dir.path().join(name);
        let out = mafit(&[
            "experiment", "--config", cfg.to_str().unwrap(), "--threads", threads, "--quiet",
            "--output", d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(EXIT_OK));
        fs::read(d.join("table.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
}

#[test]
fn experiment_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "replications = \"many\"\n").unwrap();
    assert_eq!(mafit(&["experiment", "--config", bad.to_str().unwrap(), "--output", o]).status.code(), Some(EXIT_USAGE));
    assert_eq!(mafit(&["experiment", "--theta1-values", "1.2", "--output", o]).status.code(), Some(EXIT_USAGE));
    assert_eq!(mafit(&["experiment", "--replications", "0", "--output", o]).status.code(), Some(EXIT_USAGE));
    let missing = dir.path().join("nope.toml");
    assert_eq!(mafit(&["experiment", "--config", missing.to_str().unwrap(), "--output", o]).status.code(), Some(EXIT_USAGE));
}
