use std::fs;
use std::path::Path;
use std::process::Command;

fn run(dir: &Path, cmd: &str, sets: &[&str]) -> i32 {
    let mut c = Command::new(env!("CARGO_BIN_EXE_orlicz-bounds"));
    c.arg(cmd).arg("--out").arg(dir);
    for s in sets {
        c.args(["--set", s]);
    }
    c.output().unwrap().status.code().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn bounds_exit_codes_and_values() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "bounds", &["space.n=1", "modulus.eta=power:1", "phi.phi=power:2"]), 0);
    let r = rows(&dir.path().join("bounds.csv"));
    assert_eq!(r.len(), 1);
    let s0: f64 = r[0][3].parse().unwrap();
    assert!((s0 - 0.5f64.sqrt()).abs() < 1e-8);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(json["finite"], true);

    assert_eq!(run(dir.path(), "bounds", &["space.n=2", "modulus.eta=power:1", "phi.phi=power:2"]), 10);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert!(json["sum"].is_null());

    assert_eq!(run(dir.path(), "bounds", &["space.n=1", "modulus.eta=power:0.5", "phi.phi=power:3"]), 0);
}

#[test]
fn partition_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "partition", &["modulus.eta=power:0.5"]), 0);
    for (k, row) in rows(&dir.path().join("partition.csv")).iter().enumerate().take(20) {
        let r: f64 = row[1].parse().unwrap();
        assert_eq!(r, 2f64.powi(-(k as i32)));
    }
    assert_eq!(run(dir.path(), "partition", &["modulus.eta=power:1"]), 0);
    let r = rows(&dir.path().join("partition.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], "T");
    assert_eq!(run(dir.path(), "partition", &["modulus.eta=power:0.5", "solver.k_max=5"]), 0);
    let r = rows(&dir.path().join("partition.csv"));
    assert_eq!(r.len(), 6);
    assert_eq!(r[5][2], "-");
}

#[test]
fn conjugate_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "conjugate", &["phi.phi=power:2"]), 0);
    for row in rows(&dir.path().join("conjugate.csv")) {
        let (phi, psi, gap): (f64, f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((phi - psi).abs() <= 1e-12 * phi);
        assert!(gap.abs() <= 1e-9 * (1.0 + phi));
    }
    assert_eq!(run(dir.path(), "conjugate", &["phi.phi=power:3"]), 0);
    for row in rows(&dir.path().join("conjugate.csv")) {
        let (x, psi): (f64, f64) = (row[0].parse().unwrap(), row[2].parse().unwrap());
        assert!((psi - x.powf(1.5) / 1.5).abs() <= 1e-10 * psi);
    }
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "conjugate", &["phi.phi=cubic"]), 2);
    assert_eq!(run(dir.path(), "bounds", &["space.n=9"]), 2);
    assert_eq!(run(dir.path(), "bounds", &["nowhere.key=1"]), 2);
    let status = Command::new(env!("CARGO_BIN_EXE_orlicz-bounds"))
        .args(["bounds", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn simulate_refuses_infinite_level() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "simulate", &["space.n=2", "modulus.eta=power:1", "phi.phi=power:2"]), 10);
    let code = run(
        dir.path(),
        "simulate",
        &["space.n=2", "modulus.eta=power:1", "phi.phi=power:2", "simulate.truncate_terminal=1e-6", "monte_carlo.samples=5000", "monte_carlo.pairs=20"],
    );
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sup_identity.json")).unwrap()).unwrap();
    assert_eq!(json["sup_identity_holds"], true);
    assert_eq!(rows(&dir.path().join("increments.csv")).len(), 20);
}

#[test]
fn verify_sobolev_writes_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), "verify-sobolev", &["space.n=2", "phi.phi=power:3", "monte_carlo.samples=5000", "monte_carlo.grid=200"]);
    assert_eq!(code, 0);
    let r = rows(&dir.path().join("sobolev.csv"));
    assert_eq!(r.len(), 4 * 26);
    assert!(r.iter().all(|row| row[10] == "ok"));
    let code = run(dir.path(), "verify-sobolev", &["space.n=2", "phi.phi=power:2", "monte_carlo.samples=5000", "monte_carlo.grid=200"]);
    assert_eq!(code, 0);
    assert!(rows(&dir.path().join("sobolev.csv")).iter().all(|row| row[10] == "divergent-term1"));
}

#[test]
fn config_file_round_trip_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = orlicz_bounds_cli::RunConfig::default();
    cfg.space.n = 2;
    cfg.phi.phi = orlicz_bounds_cli::config::PowerSpec(3.0);
    cfg.output.dir = dir.path().join("o");
    let path = dir.path().join("run.cfg");
    fs::write(&path, cfg.to_string()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_orlicz-bounds")).arg("bounds").arg("--config").arg(&path).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    let r = rows(&dir.path().join("o").join("bounds.csv"));
    let s0: f64 = r[0][3].parse().unwrap();
    assert!((s0 - (4.0f64 / 3.0).powf(2.0 / 3.0)).abs() < 1e-8);
}
