use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use natcd::io::{load, LoadOptions};
use natcd::report::RunReport;
use serde_json::Value;
use tempfile::TempDir;

fn natcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_natcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = natcd(args);
    assert!(
        out.status.success(),
        "natcd {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synthetic(dir: &Path, family: &str, n: usize, p: usize, seed: u64) -> PathBuf {
    let file = dir.join(format!("{family}-{seed}.csv"));
    ok(&[
        "generate",
        "--n",
        &n.to_string(),
        "--p",
        &p.to_string(),
        "--family",
        family,
        "--sparsity",
        "3",
        "--signal",
        "0.5",
        "--min-class-fraction",
        "0.2",
        "--seed",
        &seed.to_string(),
        "--out",
        file.to_str().unwrap(),
    ]);
    file
}

fn read_report(path: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unpenalised_gaussian_fit_solves_normal_equations() {
    let dir = TempDir::new().unwrap();
    let csv = synthetic(dir.path(), "gaussian", 60, 6, 4);
    let json = dir.path().join("fit.json");
    ok(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "gaussian",
        "--mu",
        "0",
        "--lambda",
        "0",
        "--eps",
        "1e-12",
        "--output",
        "structured",
        "--out",
        json.to_str().unwrap(),
    ]);
    let report = read_report(&json);
    let beta = report.entries[0].dense(6);

    let data = load(&csv, &LoadOptions::new("y")).unwrap().dataset;
    let x = DMatrix::from_fn(data.n(), data.p(), |i, j| data.get(i, j));
    let y = DVector::from_column_slice(data.y());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let exact = xtx.cholesky().unwrap().solve(&xty);
    for j in 0..6 {
        assert!((beta[j] - exact[j]).abs() < 1e-8, "{j}: {} vs {}", beta[j], exact[j]);
    }
}

#[test]
fn check_certifies_path_reports() {
    let dir = TempDir::new().unwrap();
    for (seed, family) in ["gaussian", "binomial", "poisson"].into_iter().enumerate() {
        let csv = synthetic(dir.path(), family, 80, 10, seed as u64);
        let json = dir.path().join(format!("{family}.json"));
        ok(&[
            "path",
            "--input",
            csv.to_str().unwrap(),
            "--family",
            family,
            "--lambda",
            "0.05",
            "--path-length",
            "12",
            "--output",
            "structured",
            "--out",
            json.to_str().unwrap(),
        ]);
        let checked = dir.path().join(format!("{family}-check.json"));
        ok(&[
            "check",
            "--report",
            json.to_str().unwrap(),
            "--output",
            "structured",
            "--out",
            checked.to_str().unwrap(),
        ]);
        let report = read_report(&checked);
        assert_eq!(report.config.command, "check");
        assert_eq!(report.entries.len(), 12);
        for e in &report.entries {
            let c = e.certificate.unwrap();
            let worst = c
                .box_violation
                .max(c.complementarity_violation)
                .max(c.stationarity_violation);
            assert!(worst < 100.0 * 1e-6, "{family} k {}: {worst:e}", e.k);
            assert!(e.audit.unwrap().total > 0);
        }
    }
}

#[test]
fn check_rejects_tampered_coefficients() {
    let dir = TempDir::new().unwrap();
    let csv = synthetic(dir.path(), "binomial", 80, 8, 2);
    let json = dir.path().join("fit.json");
    ok(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "binomial",
        "--mu",
        "0.01",
        "--output",
        "structured",
        "--out",
        json.to_str().unwrap(),
    ]);
    let mut report = read_report(&json);
    for c in &mut report.entries[0].coefficients {
        c.1 *= 1.5;
    }
    std::fs::write(&json, serde_json::to_string(&report).unwrap()).unwrap();
    let out = natcd(&["check", "--report", json.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

fn strip_runtimes(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_seconds");
            map.values_mut().for_each(strip_runtimes);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_runtimes),
        _ => {}
    }
}

#[test]
fn structured_output_is_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let csv = synthetic(dir.path(), "poisson", 70, 9, 7);
    for start in ["cold", "warm"] {
        let run = || {
            let out = ok(&[
                "path",
                "--input",
                csv.to_str().unwrap(),
                "--family",
                "poisson",
                "--path-length",
                "10",
                "--start",
                start,
                "--output",
                "structured",
            ]);
            let mut v: Value = serde_json::from_str(&out).unwrap();
            strip_runtimes(&mut v);
            v
        };
        assert_eq!(run(), run(), "{start}");
    }
}

#[test]
fn path_head_has_no_penalised_coefficients() {
    let dir = TempDir::new().unwrap();
    for (seed, family) in ["gaussian", "binomial", "poisson"].into_iter().enumerate() {
        let csv = synthetic(dir.path(), family, 60, 12, 10 + seed as u64);
        let tsv = ok(&[
            "path",
            "--input",
            csv.to_str().unwrap(),
            "--family",
            family,
            "--path-length",
            "6",
        ]);
        let head: Vec<&str> = tsv.lines().skip(1).filter(|l| l.starts_with("1\t")).collect();
        assert_eq!(head.len(), 1, "{family}: {head:?}");
        assert_eq!(head[0].split('\t').nth(4), Some("0"), "{family}: {}", head[0]);
        // later entries select something
        assert!(tsv
            .lines()
            .any(|l| l.starts_with("6\t") && l.split('\t').nth(4) != Some("0")));
    }
}

#[test]
fn conflicting_flags_fail_before_reading_data() {
    let missing = "/nonexistent/data.csv";
    let cases: [&[&str]; 4] = [
        &[
            "fit", "--input", missing, "--family", "gaussian", "--mu", "0.1", "--start", "warm",
        ],
        &[
            "fit",
            "--input",
            missing,
            "--family",
            "gaussian",
            "--mu",
            "0.1",
            "--path-length",
            "20",
        ],
        &["path", "--input", missing, "--family", "gaussian", "--mu", "0.1"],
        &["fit", "--input", missing, "--family", "gaussian"],
    ];
    for args in cases {
        let out = natcd(args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(
            err.contains("--mu") || err.contains("--start") || err.contains("--path-length"),
            "{err}"
        );
        assert!(!err.contains("nonexistent"), "{err}");
    }
    // bad values are rejected by the parser
    for args in [
        &["fit", "--input", missing, "--family", "gamma", "--mu", "0.1"][..],
        &["fit", "--input", missing, "--family", "gaussian", "--mu", "-1"][..],
        &[
            "fit", "--input", missing, "--family", "gaussian", "--mu", "0.1", "--rule", "newton",
        ][..],
    ] {
        assert!(!natcd(args).status.success(), "{args:?}");
    }
    // and a missing file is an error with a diagnostic
    let out = natcd(&["fit", "--input", missing, "--family", "gaussian", "--mu", "0.1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}

#[test]
fn fit_with_mu_path_matches_path_command() {
    let dir = TempDir::new().unwrap();
    let csv = synthetic(dir.path(), "binomial", 50, 7, 5);
    let a = ok(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "binomial",
        "--mu",
        "path",
        "--path-length",
        "5",
    ]);
    let b = ok(&[
        "path",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "binomial",
        "--path-length",
        "5",
    ]);
    assert_eq!(a, b);
}

#[test]
fn standardised_fit_predicts_on_original_scale() {
    let dir = TempDir::new().unwrap();
    // columns on very different scales
    let mut text = String::from("y,a,b,c\n");
    for i in 0..40 {
        let t = i as f64;
        let a = (t * 0.37).sin() * 1000.0;
        let b = (t * 1.3).cos() * 0.01;
        let c = t - 20.0;
        let y = 0.002 * a + 300.0 * b + 0.1 * c + (t * 2.9).sin();
        text.push_str(&format!("{y},{a},{b},{c}\n"));
    }
    let csv = dir.path().join("scaled.csv");
    std::fs::write(&csv, text).unwrap();
    let json = dir.path().join("std.json");
    ok(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "gaussian",
        "--mu",
        "0.05",
        "--standardize",
        "--output",
        "structured",
        "--out",
        json.to_str().unwrap(),
    ]);
    let report = read_report(&json);
    let entry = &report.entries[0];
    let original = entry
        .original_coefficients
        .as_ref()
        .expect("original-scale coefficients");

    let raw = load(&csv, &LoadOptions::new("y")).unwrap().dataset;
    let mut scaled_opts = LoadOptions::new("y");
    scaled_opts.standardize = true;
    let scaled = load(&csv, &scaled_opts).unwrap().dataset;

    let mut beta_orig = vec![0.0; raw.p()];
    for &(j, v) in original {
        beta_orig[j] = v;
    }
    let eta_raw = raw.linear_predictor(&beta_orig);
    let eta_scaled = scaled.linear_predictor(&entry.dense(raw.p()));
    for (a, b) in eta_raw.iter().zip(&eta_scaled) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn generate_round_trips_through_fit() {
    let dir = TempDir::new().unwrap();
    let truth = dir.path().join("truth.txt");
    let csv = dir.path().join("g.csv");
    ok(&[
        "generate",
        "--n",
        "30",
        "--p",
        "5",
        "--seed",
        "9",
        "--delimiter",
        "tab",
        "--out",
        csv.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read_to_string(&truth).unwrap().lines().count(), 5);
    let first = std::fs::read_to_string(&csv).unwrap();
    assert!(first.starts_with("y\tx1\tx2\tx3\tx4\n"));
    let tsv = ok(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--delimiter",
        "tab",
        "--family",
        "gaussian",
        "--mu",
        "0.1",
    ]);
    assert!(tsv.starts_with("k\tmu"));
}

#[test]
fn bench_reports_every_penalty() {
    let dir = TempDir::new().unwrap();
    let csv = synthetic(dir.path(), "binomial", 60, 8, 3);
    let out = ok(&[
        "bench",
        "--input",
        csv.to_str().unwrap(),
        "--family",
        "binomial",
        "--path-length",
        "7",
        "--output",
        "structured",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert!(v["max_objective_difference"].as_f64().unwrap() < 1e-6);
}
