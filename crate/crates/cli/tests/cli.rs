use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TRINARY: &str = r#"{"type": "discrete", "x_labels": ["a", "b", "c"], "x_values": [0, 1, 2],
 "prior": [0.3, 0.4, 0.3],
 "channel": [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]}"#;

const NOISELESS: &str = r#"{"type": "discrete", "x_labels": ["a", "b"], "x_values": [0, 1],
 "prior": [0.5, 0.5], "channel": [[1, 0], [0, 1]]}"#;

const FOUR_POINTS: &str = "name,distortion,perception\nA,3,3\nB,2,2\nC,1,3.5\nD,3.5,1\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdtradeoff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// (lambda, distortion, perception) rows of a curve CSV.
fn curve_rows(path: &Path) -> Vec<(f64, f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("lambda,distortion,perception,gap"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').take(3).map(|v| v.parse().unwrap()).collect();
            (f[0], f[1], f[2])
        })
        .collect()
}

#[test]
fn version_flag() {
    let o = run(&["--version"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("pdtradeoff "));
}

#[test]
fn trinary_curve_is_monotone() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let out = dir.path().join("curve.csv");
    let lambdas: Vec<String> = (0..16)
        .map(|i| format!("{}", 10f64.powf(-3.0 + 0.4 * i as f64)))
        .collect();
    let o = run(&[
        "curve",
        s(&model),
        "--divergence",
        "kl",
        "--lambdas",
        &lambdas.join(","),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = curve_rows(&out);
    assert_eq!(rows.len(), 16);
    for w in rows.windows(2) {
        assert!(w[0].0 < w[1].0);
        assert!(w[1].1 >= w[0].1 - 1e-9);
        assert!(w[1].2 <= w[0].2 + 1e-9);
    }
    assert!(stdout(&o).contains("points=16 flagged=0"));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("run-config ") && err.contains(r#""divergence":"kl""#));
}

#[test]
fn zero_multiplier_gives_single_point_at_minimum_distortion() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let out = dir.path().join("curve.csv");
    let o = run(&[
        "curve",
        s(&model),
        "--divergence",
        "tv",
        "--lambdas",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = curve_rows(&out);
    assert_eq!(rows.len(), 1);
    let b = run(&["bounds", s(&model)]);
    let d_min: f64 = stdout(&b)
        .lines()
        .next()
        .unwrap()
        .trim_start_matches("D_min = ")
        .parse()
        .unwrap();
    assert!((rows[0].1 - d_min).abs() < 1e-9);
}

#[test]
fn bad_multiplier_lists_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let out = dir.path().join("curve.csv");
    for bad in ["", ",", "-1", "nan", "1,x"] {
        let o = run(&["curve", s(&model), "--lambdas", bad, "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{bad:?}");
    }
    assert!(!out.exists());
}

#[test]
fn gaussian_curve_starts_at_minimum_distortion() {
    let o = run(&["gaussian", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,distortion,perception,gap");
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[1] - 0.5).abs() < 1e-12);
    assert_eq!(text.lines().count(), 201);
    let below = run(&["gaussian", "--d-grid", "0.4,0.6"]);
    assert_eq!(below.status.code(), Some(2));
}

#[test]
fn noiseless_bounds_are_zero() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", NOISELESS);
    let o = run(&["bounds", s(&model)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "D_min = 0\nD_max = 0\n");
}

#[test]
fn estimator_kernel_and_report() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let o = run(&["estimators", s(&model), "--which", "map"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "y,a,b,c\n0,1,0,0\n1,0,1,0\n2,0,0,1\n");
    let r = run(&["estimators", s(&model), "--which", "ps", "--report"]);
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["estimator"], "ps");
    assert_eq!(v["deterministic"], false);
    assert!(v["perception"]["tv"].as_f64().unwrap() < 1e-12);
}

#[test]
fn plane_marks_admissible_points() {
    let dir = TempDir::new().unwrap();
    let records = write(&dir, "r.csv", FOUR_POINTS);
    let svg = dir.path().join("p.svg");
    let csv = dir.path().join("p.csv");
    let o = run(&[
        "plane",
        s(&records),
        "--out-svg",
        s(&svg),
        "--out-csv",
        s(&csv),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "admissible: B,C,D\n");
    let svg = fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches(r#"class="admissible""#).count(), 3);
    assert!(fs::read_to_string(csv).unwrap().contains("A,3,3,false"));
}

#[test]
fn probe_reports_json() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let o = run(&["probe", s(&model)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("outcome").is_some());
    let noiseless = write(&dir, "n.json", NOISELESS);
    assert_eq!(run(&["probe", s(&noiseless)]).status.code(), Some(2));
}

#[test]
fn empty_inputs_exit_with_usage_error() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty", "");
    let out = dir.path().join("o.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["curve", s(&empty), "--out", s(&out)],
        vec!["bounds", s(&empty)],
        vec!["estimators", s(&empty), "--which", "mmse"],
        vec!["plane", s(&empty)],
        vec!["probe", s(&empty)],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8(o.stderr).unwrap().contains("empty"));
    }
}

#[test]
fn missing_files_and_directories_exit_with_io_error() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["bounds", s(&missing)]).status.code(), Some(4));
    let nowhere = dir.path().join("no/such/dir/c.csv");
    assert_eq!(
        run(&["curve", s(&model), "--out", s(&nowhere)])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn malformed_model_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", r#"{"type": "discrete", "x_labels": ["a"]}"#);
    let o = run(&["bounds", s(&model)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("m.json"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TRINARY);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert_eq!(
            run(&["curve", s(&model), "--out", s(out)]).status.code(),
            Some(0)
        );
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    let g1 = run(&["gaussian", "--sigma", "0.7"]);
    let g2 = run(&["gaussian", "--sigma", "0.7"]);
    assert_eq!(g1.stdout, g2.stdout);
}
