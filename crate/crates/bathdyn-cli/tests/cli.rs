use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bathdyn"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("scenario.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

const STEADY: &str = r#"{
  "task": "steady",
  "model": { "kind": "ohmic", "eta": 0.05, "s": 1.0, "omega_c": 8.0, "beta": 0.1 },
  "grid": { "t_max": 20.0, "dt": 0.01 }
}"#;

#[test]
fn empty_model_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, r#"{"task": "steady", "model": {}, "grid": {"t_max": 1.0, "dt": 0.01}}"#);
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, STEADY);
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "options.bogus=1",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn coarse_grid_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, STEADY);
    let out = run(&["steady", "--config", cfg.to_str().unwrap(), "--set", "grid.dt=0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&["run", "--config", dir.path().join("absent.cfg").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn truncation_leakage_is_a_solver_error() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("trajectory.cfg");
    let out = run(&[
        "occupation",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.t_max=2",
        "--set",
        "options.fock_dim=3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_past_recurrence_is_a_solver_error() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("oracle_check.cfg");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.t_max=40",
        "--set",
        "options.oracle_modes=100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("coefficients_eta.cfg");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let o = dir.path().join(format!("run{k}"));
        let out = run(&["run", "--config", cfg.to_str().unwrap(), "--set", "grid.t_max=10", "--set", "options.t_eval=10", "--out", o.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(o);
    }
    for name in ["coefficients.csv", "teff.csv", "manifest.json"] {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn set_override_reaches_the_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, STEADY);
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--set", "model.eta=0.02", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["model"]["eta"], 0.02);
    let steady: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("steady.json")).unwrap()).unwrap();
    assert!(steady["t_eff"].as_f64().unwrap() > 0.0);
}

#[test]
fn alias_subcommand_overrides_task() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, STEADY);
    let out = run(&["sweep-eta", "--config", cfg.to_str().unwrap(), "--set", r#"sweep.eta={"values":[0.02,0.05]}"#, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.contains("# task: sweep_eta"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 3);
}

#[test]
fn csv_header_block_and_number_format() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, STEADY);
    let out = run(&["dissipation", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("dissipation.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# bathdyn-cli "));
    assert!(csv.contains("# config_sha256: "));
    assert!(csv.contains("# units: "));
    let data = csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    for field in data.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{field}");
    }
}

/// Every bundled scenario validates and runs on a shortened horizon.
#[test]
fn bundled_configs_run() {
    let short: &[(&str, &[&str])] = &[
        ("coefficients_eta.cfg", &["grid.t_max=2", "options.t_eval=2"]),
        ("teff_eta.cfg", &["grid.t_max=2", "options.t_eval=2", r#"sweep.eta={"values":[0.1]}"#]),
        ("coefficients_omegac.cfg", &["grid.t_max=1", "options.t_eval=1"]),
        ("teff_omegac.cfg", &["grid.t_max=1", "options.t_eval=1", r#"sweep.omega_c={"values":[4.0]}"#]),
        ("occupation_eta.cfg", &["grid.t_max=2"]),
        ("occupation_omegac.cfg", &["grid.t_max=1"]),
        ("occupation_alpha0.cfg", &["grid.t_max=2"]),
        ("cavity_gap.cfg", &["grid.t_max=5", "options.t_eval=5"]),
        ("nonmarkov_eta.cfg", &["grid.t_max=5", r#"sweep.eta={"values":[0.05,0.2]}"#]),
        ("kernels.cfg", &["grid.t_max=1"]),
        ("dissipation.cfg", &["grid.t_max=2"]),
        ("steady.cfg", &["grid.t_max=5"]),
        ("boundstate_map.cfg", &[]),
        ("oracle_check.cfg", &["grid.t_max=2", "options.oracle_modes=400"]),
        ("trajectory.cfg", &["grid.t_max=2"]),
    ];
    let bundled = std::fs::read_dir(configs()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "cfg")).count();
    assert_eq!(bundled, short.len());
    for (name, sets) in short {
        let dir = TempDir::new().unwrap();
        let cfg = configs().join(name);
        let mut args = vec!["run".to_string(), "--config".into(), cfg.to_str().unwrap().into(), "--out".into(), dir.path().to_str().unwrap().into()];
        for s in *sets {
            args.push("--set".into());
            args.push(s.to_string());
        }
        let out = bin().args(&args).output().unwrap();
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join("manifest.json").exists(), "{name}");
    }
}
