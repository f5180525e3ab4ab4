//! The binary against the shipped configurations: exit codes, reports and
//! solution files.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> Value {
    let text = std::fs::read_to_string(configs().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Runs the binary; returns the exit code and the parsed stdout report.
fn run(args: &[&str], config: &Path, out: &Path) -> (i32, Value) {
    let o = Command::new(env!("CARGO_BIN_EXE_ricci-tube"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    let code = o.status.code().unwrap();
    let report = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    if report.is_null() {
        eprintln!("{}", String::from_utf8_lossy(&o.stderr));
    }
    (code, report)
}

/// Writes `cfg` into a fresh directory and runs against it.
fn run_value(args: &[&str], cfg: &Value) -> (i32, Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
    let (code, report) = run(args, &path, &dir.path().join("out"));
    (code, report, dir)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn constants_of_shipped_structures() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(&["constants"], &configs().join("torus.json"), dir.path());
    assert_eq!(code, 0);
    assert_eq!(rep["beta"], json!([0.0, 0.0]));
    assert!(rep["gamma"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|a| a.as_array().unwrap())
        .flat_map(|a| a.as_array().unwrap())
        .all(|g| g == &json!(0.0)));

    let (code, rep) = run(
        &["constants"],
        &configs().join("sphere-su2.json"),
        dir.path(),
    );
    assert_eq!(code, 0);
    assert_eq!(rep["beta"], json!([2.0]));
    assert_eq!(rep["gamma"], json!([[[0.0]]]));
    assert_eq!(rep["dims"], json!([2]));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn jacobi_failure_is_invalid_input() {
    // e0..e4 with [e0,e1] = e2 and [e2,e3] = e4 (totally antisymmetric
    // triples) violates Jacobi on (e0, e1, e3)
    let cfg = json!({
        "structure": {
            "kind": "table",
            "dim": 5,
            "modules": [[0], [1], [2], [3], [4]],
            "brackets": { "sparse": [
                [0, 1, 2, 1.0], [1, 2, 0, 1.0], [2, 0, 1, 1.0],
                [2, 3, 4, 1.0], [3, 4, 2, 1.0], [4, 2, 3, 1.0]
            ] }
        }
    });
    let (code, _, _d) = run_value(&["constants"], &cfg);
    assert_eq!(code, 2);
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(&["check"], &configs().join("torus.json"), dir.path());
    assert_eq!(code, 0, "{rep}");
    assert!(rep["sigma"].as_f64().unwrap() <= rep["sigma0"].as_f64().unwrap());

    let mut wide = shipped("torus.json");
    wide["sigma"] = json!(0.5);
    let (code, rep, _d) = run_value(&["check"], &wide);
    assert_eq!(code, 3);
    assert_eq!(rep["checks"]["sigma"]["passed"], json!(false));

    let (code, rep) = run(
        &["check"],
        &configs().join("torus-indefinite.json"),
        dir.path(),
    );
    assert_eq!(code, 3);
    assert_eq!(rep["conditional"], json!(true));
}

#[test]
fn global_solve_on_certified_torus() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(&["solve-global"], &configs().join("torus.json"), dir.path());
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["certified"], json!(true));
    let r = &rep["residuals"]["report"];
    assert!(r["sigma_bar_defect"].as_f64().unwrap() <= 1e-6);
    assert!(r["orbit_defect"].as_f64().unwrap() <= 1e-6);
    assert!(dir.path().join("solution.csv").exists() && dir.path().join("report.json").exists());
}

#[test]
fn iteration_cap_forces_exit_4() {
    // at the certified sigma one step already converges; at 0.05 it takes three
    let mut cfg = shipped("torus.json");
    cfg["sigma"] = json!(0.05);
    let (code, _, _d) = run_value(&["solve-global", "--max-iter", "1"], &cfg);
    assert_eq!(code, 4);
    let (code, _, _d) = run_value(&["solve-global", "--max-iter", "3"], &cfg);
    assert_eq!(code, 0);
}

#[test]
fn unequal_ends_are_reproduced_exactly() {
    let mut cfg = shipped("torus.json");
    cfg["sigma"] = json!(0.05);
    cfg["b"] = json!([1.0001, 0.9999]);
    let (code, rep, d) = run_value(&["solve-global"], &cfg);
    assert_eq!(code, 0, "{rep}");
    let rows = read_csv(&d.path().join("out/solution.csv"));
    assert_eq!(rows[0], ["r", "h", "hp", "f1", "f2", "fp1", "fp2"]);
    let f = |row: &Vec<String>| {
        (
            row[3].parse::<f64>().unwrap(),
            row[4].parse::<f64>().unwrap(),
        )
    };
    assert_eq!(f(&rows[1]), (1.0, 1.0));
    assert_eq!(f(rows.last().unwrap()), (1.0001, 0.9999));
}

#[test]
fn solve_then_verify_round_trips() {
    let mut cfg = shipped("torus.json");
    cfg["sigma"] = json!(0.05);
    cfg["grid"] = json!(401);
    let (code, solved, d) = run_value(&["solve-global"], &cfg);
    assert_eq!(code, 0);
    let csv = d.path().join("out/solution.csv");
    let (code, checked) = run(
        &["verify", "--solution", csv.to_str().unwrap()],
        &d.path().join("config.json"),
        &d.path().join("again"),
    );
    assert_eq!(code, 0);
    let (a, b) = (
        &solved["residuals"]["report"],
        &checked["residuals"]["report"],
    );
    for key in [
        "sigma_bar_defect",
        "orbit_defect",
        "bianchi_defect",
        "head_defect",
        "convergence_ratio",
    ] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!((x - y).abs() <= 1e-12, "{key}: {x} vs {y}");
    }
}

#[test]
fn local_solve_from_initial_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(
        &["solve-local"],
        &configs().join("torus-local.json"),
        dir.path(),
    );
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["provenance"]["kappa"], json!(1.0));
    let rows = read_csv(&dir.path().join("solution.csv"));
    let h0: f64 = rows[1][1].parse().unwrap();
    assert!((h0 - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-15);
}

#[test]
fn local_inequality_failure_reports_lhs() {
    // on the torus the left-hand side is Σδ² − (Σδ)² − Σφ = 8 − 0 − 2
    let mut cfg = shipped("torus-local.json");
    cfg["local"]["delta"] = json!([2.0, -2.0]);
    let (code, rep, _d) = run_value(&["solve-local"], &cfg);
    assert_eq!(code, 3);
    assert!((rep["hypothesis"]["lhs"].as_f64().unwrap() - 6.0).abs() <= 1e-12);
}

#[test]
fn recipe_doubles_beta_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(
        &["solve-local"],
        &configs().join("torus-recipe.json"),
        dir.path(),
    );
    assert_eq!(code, 0, "{rep}");
    let lhs = rep["provenance"]["lhs"].as_f64().unwrap();
    assert!(lhs < 0.0);
}

#[test]
fn breakdown_keeps_partial_solution() {
    let cfg = json!({
        "mode": "indefinite",
        "structure": { "kind": "builtin", "name": "torus", "n": 2 },
        "sigma": 10.0,
        "grid": 1001,
        "phi": [{ "constant": -100.0 }, { "constant": -100.0 }],
        "a": [1.0, 1.0],
        "b": [1.0, 1.0],
        "local": { "tau": 0.5, "delta": [20.0, 20.0], "max_span": 0.5 }
    });
    let (code, rep, d) = run_value(&["solve-local"], &cfg);
    assert_eq!(code, 6);
    assert_eq!(rep["breakdown"], json!(true));
    let kappa = rep["provenance"]["kappa"].as_f64().unwrap();
    assert!(kappa > 0.0 && kappa < 0.5);
    assert!(d.path().join("out/solution.csv").exists());
}

#[test]
fn verify_shipped_and_damaged_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("round-sphere.json");
    let (code, rep) = run(&["verify"], &cfg, dir.path());
    assert_eq!(code, 0, "{rep}");

    let rows = read_csv(&configs().join("round-sphere.csv"));
    let write = |name: &str, rows: &[Vec<String>], tail: &str| {
        let path = dir.path().join(name);
        let mut text: String = rows.iter().map(|r| r.join(",") + "\n").collect();
        text.push_str(tail);
        std::fs::write(&path, text).unwrap();
        path
    };

    let scaled: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mut r = r.clone();
            if j > 0 {
                for k in [3, 4] {
                    r[k] = format!("{:.16e}", 1.01 * r[k].parse::<f64>().unwrap());
                }
            }
            r
        })
        .collect();
    let path = write("scaled.csv", &scaled, "");
    let (code, _) = run(
        &["verify", "--solution", path.to_str().unwrap()],
        &cfg,
        dir.path(),
    );
    assert_eq!(code, 5);

    let path = write("truncated.csv", &rows[..rows.len() / 2], "0.15,7.07e-01");
    let (code, _) = run(
        &["verify", "--solution", path.to_str().unwrap()],
        &cfg,
        dir.path(),
    );
    assert_eq!(code, 2);
}

#[test]
fn unknown_fields_are_rejected() {
    let mut cfg = shipped("torus.json");
    cfg["sigmaa"] = json!(1.0);
    let (code, _, _d) = run_value(&["check"], &cfg);
    assert_eq!(code, 2);
}
