use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use recipkit::models::{builtin_specs, scalar_relaxation, MODEL_PATH_VAR};
use serde_json::Value;
use tempfile::TempDir;

fn recipkit(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_recipkit"));
    cmd.args(args).env_remove(MODEL_PATH_VAR);
    cmd
}

fn run(args: &[&str]) -> Output {
    recipkit(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    let out = run(&all);
    let report = fs::read_to_string(dir.join("report.json")).map(|t| serde_json::from_str(&t).unwrap());
    (code(&out), report.unwrap_or(Value::Null))
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn scalar_relaxation_is_reciprocal() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["check-reciprocity", "--model", "scalar-relaxation"]);
    assert_eq!(status, 0);
    assert_eq!(report["result"]["reciprocal"], true);
    assert_eq!(report["passed"], true);
}

#[test]
fn gyrator_fails_reciprocity_with_status_one() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["check-reciprocity", "--model", "gyrator"]);
    assert_eq!(status, 1);
    assert_eq!(report["result"]["reciprocal"], false);
}

#[test]
fn indefinite_fixture_reaches_a_compatible_storage() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["compatible-q", "--model", "indefinite-G", "--q0", "identity"]);
    assert_eq!(status, 0);
    let q = matrix(&report["result"]["q"]);
    let g = matrix(&report["result"]["metric"]);
    // Q − G Q⁻¹ G for 2x2 matrices, with the inverse written out.
    let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    let qi = [[q[1][1] / det, -q[0][1] / det], [-q[1][0] / det, q[0][0] / det]];
    let mul = |a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]| {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = (0..2).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let gm = [[g[0][0], g[0][1]], [g[1][0], g[1][1]]];
    let gqg = mul(&mul(&gm, &qi), &gm);
    let gap = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (q[i][j] - gqg[i][j]).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-10, "gap {gap}");
    assert!(dir.path().join("q.csv").exists());
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"kind\": \"linear\", ").unwrap();
    let out = run(&["check-reciprocity", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("malformed JSON"), "{stderr}");
}

#[test]
fn input_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["check-reciprocity"],
        &["check-reciprocity", "--model", "no-such-model"],
        &["check-reciprocity", "--model", "scalar-relaxation", "--tol", "bogus=1e-3"],
        &["check-reciprocity", "--model", "scalar-relaxation", "--tol", "reciprocity=-1"],
        &["simulate", "--model", "scalar-relaxation", "--step", "0"],
        &["compatible-q", "--model", "swing"],
        &["recover-g", "--model", "gyrator"],
        &["check-reciprocity", "--input", "/nonexistent/model.json"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn model_files_select_by_name() {
    let dir = TempDir::new().unwrap();
    let mut a = scalar_relaxation();
    a.name = "first".into();
    let mut b = scalar_relaxation();
    b.name = "second".into();
    let path = dir.path().join("models.json");
    fs::write(&path, serde_json::to_string(&vec![a, b]).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(code(&run(&["check-reciprocity", "--input", p])), 2);
    let out = run(&["check-reciprocity", "--input", p, "--model", "second"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["model"], "second");
}

#[test]
fn list_models_shows_builtins_with_descriptions() {
    let out = run(&["list-models"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["brayton-moser", "swing", "rc-relaxation"] {
        let line = text.lines().find(|l| l.split_whitespace().next() == Some(name)).expect(name);
        assert!(line.len() > name.len() + 10, "{line}");
    }
    assert_eq!(text.lines().count(), builtin_specs().len());
}

#[test]
fn empty_model_path_means_builtins_only() {
    let out = recipkit(&["list-models"]).env(MODEL_PATH_VAR, "").output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), builtin_specs().len());
}

#[test]
fn user_registry_adds_models_and_rejects_duplicates() {
    let dir = TempDir::new().unwrap();
    let mut extra = scalar_relaxation();
    extra.name = "my-lag".into();
    extra.description = "user copy of the first-order lag".into();
    let good = dir.path().join("good.json");
    fs::write(&good, serde_json::to_string(&extra).unwrap()).unwrap();

    let out = recipkit(&["list-models"]).env(MODEL_PATH_VAR, &good).output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("my-lag"));
    let out = recipkit(&["check-reciprocity", "--model", "my-lag"]).env(MODEL_PATH_VAR, &good).output().unwrap();
    assert_eq!(code(&out), 0);

    let dup = dir.path().join("dup.json");
    fs::write(&dup, serde_json::to_string(&scalar_relaxation()).unwrap()).unwrap();
    let out = recipkit(&["list-models"]).env(MODEL_PATH_VAR, &dup).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["simulate", "--model", "swing", "--horizon", "2", "--seed", "11"];
    assert_eq!(run_in(a.path(), &args).0, 0);
    assert_eq!(run_in(b.path(), &args).0, 0);
    for file in ["report.json", "trajectory.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let other = ["simulate", "--model", "swing", "--horizon", "2", "--seed", "12"];
    run_in(c.path(), &other);
    assert_ne!(fs::read(a.path().join("trajectory.csv")).unwrap(), fs::read(c.path().join("trajectory.csv")).unwrap());
}

#[test]
fn trajectory_csv_is_plot_ready() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["simulate", "--model", "rc-relaxation", "--horizon", "1", "--step", "0.1"]);
    assert_eq!(status, 0);
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.first(), Some(&"t"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), report["result"]["samples"].as_u64().unwrap() as usize);
    assert!(rows.iter().all(|r| r.len() == header.len()));
    assert_eq!(rows.last().unwrap()[0], 1.0);
}

#[test]
fn report_numbers_use_seventeen_significant_digits() {
    let out = run(&["check-reciprocity", "--model", "indefinite-G"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.0000000000000001e-9"), "{text}");
}

#[test]
fn conversion_commands() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["convert-ph", "--model", "swing-energy"]);
    assert_eq!(status, 0);
    let assumptions = report["result"]["conversion"]["assumptions"].as_array().unwrap();
    assert_eq!(assumptions.len(), 4);
    assert!(dir.path().join("coordinates.csv").exists());

    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["convert-ph", "--model", "indefinite-G"]);
    assert_eq!(status, 0);
    assert!(report["result"]["j_skew_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn relaxation_certificates() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["certify-relaxation", "--model", "rc-relaxation"]);
    assert_eq!(status, 0);
    assert_eq!(report["result"]["relaxation"], true);
    assert!(dir.path().join("storage.csv").exists());
    // An indefinite metric generator cannot certify.
    let (status, report) = run_in(dir.path(), &["certify-relaxation", "--model", "swing"]);
    assert_eq!(status, 1);
    assert_eq!(report["result"]["relaxation"], false);
}

#[test]
fn every_command_exits_with_a_documented_status() {
    let commands = [
        "check-reciprocity",
        "check-passivity",
        "compatible-q",
        "recover-g",
        "legendre",
        "christoffel",
        "variational-test",
        "simulate",
        "certify-relaxation",
        "convert-ph",
    ];
    for model in ["scalar-relaxation", "gyrator", "indefinite-G", "brayton-moser", "rc-linear"] {
        for cmd in commands {
            let out = run(&[cmd, "--model", model, "--horizon", "1"]);
            let c = code(&out);
            assert!((0..=3).contains(&c), "{cmd} {model}: {c}");
            if c == 0 {
                let report: Value = serde_json::from_slice(&out.stdout).unwrap();
                assert_eq!(report["passed"], true, "{cmd} {model}");
            }
        }
    }
}

#[test]
fn hankel_recovery_matches_the_fixture_metric() {
    let dir = TempDir::new().unwrap();
    let (status, report) = run_in(dir.path(), &["recover-g", "--model", "indefinite-G"]);
    assert_eq!(status, 0);
    assert!(report["result"]["relative_error"].as_f64().unwrap() < 1e-4);
    assert!(dir.path().join("g.csv").exists());
}
