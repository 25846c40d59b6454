use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn wavebranch(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_wavebranch"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stream_summary_and_table() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nlambda = 0.8\n", &["stream"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&d.path().join("out/stream.json"));
    assert!((s["Q"].as_f64().unwrap() - 0.32).abs() <= 1e-15);
    assert!((s["m"].as_f64().unwrap() - 0.8).abs() <= 1e-12);
    let csv = fs::read_to_string(d.path().join("out/stream.csv")).unwrap();
    assert!(csv.starts_with("y,Psi,dPsi,ddPsi\n"));
    assert_eq!(csv.lines().count(), 102);

    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nvorticity = [1.0]\nlambda = 1.0\n", &["stream"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&d.path().join("out/stream.json"));
    assert!((s["m"].as_f64().unwrap() - 1.5).abs() <= 1e-10);
}

#[test]
fn zero_lambda_is_a_solver_error() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nlambda = 0.0\n", &["stream"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("lambda must be nonzero"), "{msg}");
}

#[test]
fn config_errors_exit_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(
        wavebranch(d.path(), "[flow]\nbogus = 1\n", &["stream"]).status.code(),
        Some(2)
    );
    assert_eq!(
        wavebranch(d.path(), "[flow]\nh = -1.0\n", &["stream"]).status.code(),
        Some(2)
    );
    assert_eq!(wavebranch(d.path(), "", &["nonsense"]).status.code(), Some(2));
}

#[test]
fn dispersion_root_and_no_bifurcation() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nlambda = 0.8\n", &["dispersion"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&d.path().join("out/dispersion.json"));
    assert!((s["tau_star"].as_f64().unwrap() - 1.374).abs() < 1e-3);
    assert_eq!(s["mode"], "mu1_positive");
    assert_eq!(s["transversality"]["holds"], true);
    let csv = fs::read_to_string(d.path().join("out/dispersion.csv")).unwrap();
    let sigma: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sigma.len(), 200);
    assert!(sigma.windows(2).all(|w| w[1] > w[0]));

    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nlambda = 1.2\n", &["dispersion"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn smallwave_exports_a_checkable_field() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[flow]\nlambda = 0.8\n[wave]\nt = 0.01\n", &["smallwave"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let field = d.path().join("out/smallwave.field.json");
    let out = wavebranch(d.path(), "", &["check", field.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in [
        "property_i",
        "property_ii_left",
        "property_ii_right",
        "property_ii_bed",
        "property_iii_left",
        "property_iii_right",
    ] {
        assert_eq!(r[key], true, "{key}");
        assert!(r["margins"][key]["margin"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn check_rejects_uniform_and_corrupted_fields() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), "[wave]\nt = 0.0\n", &["smallwave"]);
    assert_eq!(out.status.code(), Some(0));
    let field = d.path().join("out/smallwave.field.json");
    assert_eq!(
        wavebranch(d.path(), "", &["check", field.to_str().unwrap()])
            .status
            .code(),
        Some(5)
    );

    let bad = d.path().join("bad.json");
    fs::write(&bad, "{\"regime\": \"fixed_period\", \"h\": ").unwrap();
    assert_eq!(
        wavebranch(d.path(), "", &["check", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let missing = d.path().join("missing.json");
    assert_eq!(
        wavebranch(d.path(), "", &["check", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn hilbert_of_cosine_and_bad_inputs() {
    let d = TempDir::new().unwrap();
    let n = 32;
    let period = 2.0 * std::f64::consts::PI;
    let mut text = String::from("x,f\n");
    for j in 0..n {
        let x = period * j as f64 / n as f64;
        text.push_str(&format!("{x},{}\n", x.cos()));
    }
    let sig = d.path().join("cos.csv");
    fs::write(&sig, &text).unwrap();
    let out = wavebranch(d.path(), "", &["hilbert", sig.to_str().unwrap(), "--h", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("out/hilbert.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let coth = 1.0 / 0.5f64.tanh();
    assert!((row[1] - coth).abs() <= 1e-12);
    assert!((row[2] - 1.0).abs() <= 1e-12);
    assert!((row[5] - coth).abs() <= 1e-12);
    assert!(row[4].abs() <= 1e-12);

    let shifted = d.path().join("shifted.csv");
    fs::write(
        &shifted,
        text.lines()
            .map(|l| {
                if l.starts_with('x') {
                    format!("{l}\n")
                } else {
                    let (x, v) = l.split_once(',').unwrap();
                    format!("{x},{}\n", v.parse::<f64>().unwrap() + 1.0)
                }
            })
            .collect::<String>(),
    )
    .unwrap();
    assert_eq!(
        wavebranch(d.path(), "", &["hilbert", shifted.to_str().unwrap(), "--h", "0.5"])
            .status
            .code(),
        Some(2)
    );
    let empty = d.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        wavebranch(d.path(), "", &["hilbert", empty.to_str().unwrap(), "--h", "0.5"])
            .status
            .code(),
        Some(2)
    );
}

const SHORT_RUN: &str = "[flow]\nlambda = 0.8\n[continuation]\nmax_steps = 4\nnx = 9\nny = 17\n";

#[test]
fn continue_then_check_reproduces_nodal_booleans() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), SHORT_RUN, &["continue"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let header = json(&d.path().join("out/branch.json"));
    assert_eq!(header["termination"], "max_steps");
    assert_eq!(header["points"], 5);
    let csv = fs::read_to_string(d.path().join("out/branch.csv")).unwrap();
    let cols: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for row in csv.lines().skip(2) {
        let cells: Vec<&str> = row.split(',').collect();
        let k: usize = cells[0].parse().unwrap();
        let field = d.path().join(format!("out/fields/point_{k:03}.field.json"));
        let out = wavebranch(d.path(), "", &["check", field.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        for (name, cell) in cols
            .iter()
            .zip(&cells)
            .filter(|(n, _)| n.starts_with("property_") || **n == "surface_monotone")
        {
            assert_eq!(r[*name].as_bool().unwrap().to_string(), *cell, "point {k} {name}");
        }
    }
}

#[test]
fn zero_seed_warns_about_trivial_branch() {
    let d = TempDir::new().unwrap();
    let out = wavebranch(d.path(), &format!("{SHORT_RUN}[wave]\nt = 0.0\n"), &["continue"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("uniform streams"));
    assert_eq!(json(&d.path().join("out/branch.json"))["trivial"], true);
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(wavebranch(d.path(), SHORT_RUN, &["continue"]).status.code(), Some(0));
    }
    for name in [
        "branch.json",
        "branch.csv",
        "fields/point_003.field.json",
        "fields/point_004.nodal.json",
    ] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}
