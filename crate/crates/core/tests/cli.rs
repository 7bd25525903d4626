use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lattice_bell(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-bell"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> (String, Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(str::to_owned);
    let header = lines.next().unwrap();
    (header, lines.collect())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn chsh_writes_one_row_per_omega() {
    let dir = TempDir::new().unwrap();
    let out = lattice_bell(dir.path(), &["chsh", "--omega-steps", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("chsh.csv"));
    assert_eq!(header, "omega,bell_value,violation");
    assert_eq!(rows.len(), 5);
    // omega = pi/4 sits on the 5-point grid
    assert!(rows[1].starts_with("0.785398163397,2.82842712475,"));
    let record = json(&dir.path().join("chsh.json"));
    assert_eq!(record["experiment"], "chsh");
    assert_eq!(record["inputs"]["chsh"]["omega_steps"], 5);
    assert!(record.get("wall_time_seconds").is_none_or(Value::is_null));
}

#[test]
fn repeated_runs_are_byte_identical() {
    // same directory both times, since the record echoes the output path
    let a = TempDir::new().unwrap();
    let args = ["--seed", "5", "scaling", "--n-min", "2", "--n-max", "5", "--fit-from", "2"];
    let read = |name: &str| fs::read(a.path().join(name)).unwrap();
    assert!(lattice_bell(a.path(), &args).status.success());
    let first = [read("scaling.csv"), read("scaling_fit.json")];
    assert!(lattice_bell(a.path(), &args).status.success());
    assert_eq!(first, [read("scaling.csv"), read("scaling_fit.json")]);
    let (header, rows) = csv_rows(&a.path().join("scaling.csv"));
    assert_eq!(header, "N,min_bell,classical_bound,xi,mode,theta_opt,phi_opt,seed");
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",5")));
}

#[test]
fn map_grid_has_steps_squared_rows() {
    let dir = TempDir::new().unwrap();
    let out = lattice_bell(dir.path(), &["map", "--grid-steps", "2"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&dir.path().join("map.csv"));
    assert_eq!(header, "theta,phi,bell_value,xi,violation");
    assert_eq!(rows.len(), 4);
    let summary = json(&dir.path().join("map_summary.json"));
    assert_eq!(summary["experiment"], "map");
}

#[test]
fn simulate_reports_events_and_selection_probability() {
    let dir = TempDir::new().unwrap();
    let out = lattice_bell(dir.path(), &["simulate", "--theta=0.3,-0.1", "--postselect", "true"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = json(&dir.path().join("simulate.json"));
    let outputs = &record["outputs"];
    assert!((outputs["postselect_probability"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((outputs["norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(outputs["amplitudes"].as_array().unwrap().len(), 10);
    let parity = outputs["parity"]["expectation"].as_f64().unwrap();
    assert!((parity - 0.2f64.cos()).abs() < 1e-10);
    assert!(outputs["events"].as_array().is_some());
}

#[test]
fn interaction_strict_mode_fails_on_tolerance() {
    let dir = TempDir::new().unwrap();
    let loose = lattice_bell(dir.path(), &["interaction", "--chi-max", "0.02", "--steps", "3"]);
    assert!(loose.status.success());
    let (header, rows) = csv_rows(&dir.path().join("chi.csv"));
    assert_eq!(header, "chi,bell_magnitude,analytic_reference,abs_error");
    assert_eq!(rows.len(), 3);
    let strict = lattice_bell(dir.path(), &["--strict", "interaction", "--chi-max", "0.2", "--steps", "3"]);
    assert_eq!(strict.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&strict.stdout).contains("check failed"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(lattice_bell(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(lattice_bell(dir.path(), &["map", "--grid-steps", "1"]).status.code(), Some(2));
    assert_eq!(
        lattice_bell(dir.path(), &["--dimension-cap", "10", "simulate", "--n", "3"]).status.code(),
        Some(3)
    );
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(lattice_bell(&blocker.join("sub"), &["chsh"]).status.code(), Some(5));
}

#[test]
fn config_file_is_applied_and_validated() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = 3\n[chsh]\nomega_steps = 7\n").unwrap();
    let out = lattice_bell(dir.path(), &["--config", config.to_str().unwrap(), "chsh"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&dir.path().join("chsh.csv")).1.len(), 7);
    // command-line values win over the file
    let out = lattice_bell(dir.path(), &["--config", config.to_str().unwrap(), "chsh", "--omega-steps", "3"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&dir.path().join("chsh.csv")).1.len(), 3);

    fs::write(&config, "[chsh]\nomega_stepz = 7\n").unwrap();
    let out = lattice_bell(dir.path(), &["--config", config.to_str().unwrap(), "chsh"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let dir = TempDir::new().unwrap();
    assert!(lattice_bell(dir.path(), &["--timing", "chsh", "--omega-steps", "3"]).status.success());
    assert!(json(&dir.path().join("chsh.json"))["wall_time_seconds"].is_f64());
}
