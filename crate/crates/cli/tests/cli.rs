use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lognd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lognd")).args(args).output().unwrap()
}

fn run_config(dir: &Path, text: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (lognd(&args), out)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn lists_experiments() {
    let o = lognd(&["--list-experiments"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["disk_oracle", "tau_rate", "linearization_compare", "all"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        // Aliasing: N = 16 needs 128 boundary nodes, level 2 has 64.
        "experiment = \"order_inequalities\"\n[mesh]\nlevel = 2\n[basis]\nmax_frequency = 16\n",
        "experiment = \"tau_rate\"\n[grids]\ntau = []\n",
        "experiment = \"tau_rate\"\nverbose = true\n",
        "experiment = \"no_such_experiment\"\n",
        "experiment = \"tau_rate\"\n[grids]\nsteps = [0.1, 0.05, 0.02, 0.01]\n",
        "experiment = \"tau_rate\"\n[grids\n",
    ] {
        let (o, out) = run_config(dir.path(), text, &[]);
        assert_eq!(code(&o), 2, "{text}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.join("manifest.sha256").exists());
    }
    let missing = lognd(&["run", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn tau_rate_at_unit_conductivity_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "experiment = \"tau_rate\"\n[conductivity]\nkind = \"constant\"\nvalue = 1.0\n",
        &["--seed", "3"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tau_rate/report.json")).unwrap()).unwrap();
    let fits = report["fits"].as_array().unwrap();
    let slope = fits.iter().find(|f| f["name"] == "eps0.25/log_difference").unwrap()["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.15, "slope {slope}");
    assert_eq!(report["parameters"]["config"]["seed"], 3);

    // Plot data: raw (τ, norm) pairs and the fit line.
    let curve = std::fs::read_to_string(out.join("tau_rate/plot/eps0.25_log_difference.csv")).unwrap();
    assert!(curve.starts_with("tau,norm\n"));
    assert!(out.join("tau_rate/plot/eps0.25_log_difference_fit.csv").exists());

    // Every written file is in the manifest, and nothing else.
    let manifest = std::fs::read_to_string(out.join("manifest.sha256")).unwrap();
    for line in manifest.lines() {
        let (digest, rel) = line.split_once("  ").unwrap();
        assert_eq!(digest.len(), 64);
        assert!(out.join(rel).is_file(), "{rel}");
    }
    assert!(manifest.contains("  tau_rate/report.json\n"));
    assert!(manifest.contains("  tau_rate/matrices/lambda.csv\n"));
}

#[test]
fn failed_gates_exit_1() {
    // The coarsest mesh misses the disk eigenvalues by more than 2%.
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(
        dir.path(),
        "experiment = \"disk_oracle\"\n[mesh]\nlevel = 0\n[basis]\nmax_frequency = 2\n",
        &[],
    );
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("manifest.sha256").exists());
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL max_rel_error"));
}

#[test]
fn runtime_errors_exit_3() {
    // Shifts far outside the spectrum of Λ(1) cannot be resolved.
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run_config(dir.path(), "experiment = \"tau_rate\"\n[grids]\ntau = [10.0, 20.0, 40.0]\n", &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8(o.stderr).unwrap().contains("tau grid not resolvable"));
}

#[test]
fn format_selects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"scaling_identity\"\n[mesh]\nlevel = 2\n";
    let (o, out) = run_config(dir.path(), text, &["--format", "json"]);
    assert_eq!(code(&o), 0);
    let manifest = std::fs::read_to_string(out.join("manifest.sha256")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
    assert!(manifest.ends_with("  scaling_identity/report.json\n"));

    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run_config(dir.path(), text, &["--format", "csv"]);
    assert_eq!(code(&o), 0);
    let manifest = std::fs::read_to_string(out.join("manifest.sha256")).unwrap();
    assert!(!manifest.contains("report.json"));
    assert!(manifest.contains("  scaling_identity/tables/scaling.csv\n"));
    assert!(manifest.contains("  scaling_identity/matrices/lambda.csv\n"));
}
