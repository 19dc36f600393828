use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kramers_core::harness::{parse_config, read_errors_csv, run_experiment, write_outputs, ExperimentConfig};
use kramers_core::noise::NoisePath;

const SMALL: &str = r#"
kind = "full_vs_heat"

[basis]
modes = 6

[model]
nu = [0.1, 0.01, 0.001]
alpha = 0.0

[time]
steps = 256
samples = 8

[ensemble]
replicas = 3
seed = 17
"#;

fn kramers(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kramers"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_all_files_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let a = kramers(&["run", "c.toml", "--out", "a"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = kramers(
        &["run", "--config", "c.toml", "--out", "b", "--threads", "2"],
        dir.path(),
    );
    assert!(b.status.success());
    for f in ["errors.csv", "rates.csv", "stats.csv", "audit.csv", "summary.json"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let ea = fs::read(dir.path().join("a/errors.csv")).unwrap();
    let eb = fs::read(dir.path().join("b/errors.csv")).unwrap();
    assert_eq!(ea, eb);
    let rows = read_errors_csv(&dir.path().join("a/errors.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 9);
    let rates = fs::read_to_string(dir.path().join("a/rates.csv")).unwrap();
    assert!(rates.starts_with("experiment,alpha,slope,intercept,r2,n_points\n"));
    assert!(rates.contains("\nfull_vs_heat,"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(summary["q_trace"].as_f64().unwrap() > 1.0);
    // the echoed config reproduces the run
    let echoed = parse_config(summary["config"].as_str().unwrap()).unwrap();
    let again = run_experiment(&echoed).unwrap();
    assert_eq!(again.errors, rows);
}

#[test]
fn overrides_change_replicas_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = kramers(
        &["run", "c.toml", "--out", "o", "--replicas", "2", "--seed", "4"],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = read_errors_csv(&dir.path().join("o/errors.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 9);
    let base = kramers(&["run", "c.toml", "--out", "p"], dir.path());
    assert!(base.status.success());
    let other = read_errors_csv(&dir.path().join("p/errors.csv")).unwrap();
    assert_ne!(rows[1].seed, other[1].seed);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "[model]\nalpha = 1.0\nnu = [-0.5]\ncolour = 3\n",
    )
    .unwrap();
    let out = kramers(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("deferred") && err.contains("model.nu") && err.contains("model.colour"),
        "{err}"
    );
    let missing = kramers(&["run", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.toml"));
}

#[test]
fn blow_up_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[basis]\nmodes = 2\n[model]\npolynomial = [0.0, 0.0, 0.0, 1.0]\nnu = [0.5]\n[initial]\nu0 = [50.0]\nu1 = \"zero\"\n[time]\nsteps = 64\nsamples = 4\n";
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let out = kramers(&["run", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("blow-up") && err.contains("nu = 0.5"), "{err}");
}

#[test]
fn oracle_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kramers(&["oracle-suite", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
    assert!(!text.contains("FAIL"));
}

#[test]
fn rates_subcommand_refits_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    assert!(kramers(&["run", "c.toml", "--out", "o"], dir.path()).status.success());
    let out = kramers(&["rates", "o/errors.csv", "--out", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let raw: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("raw,"))
        .unwrap()
        .split(',')
        .collect();
    let direct = fs::read_to_string(dir.path().join("o/rates.csv")).unwrap();
    let first: Vec<&str> = direct.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(raw[2], first[2], "slopes differ");
    assert!(dir.path().join("r/rates.csv").exists());
}

#[test]
fn dump_noise_writes_readable_paths() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = kramers(&["dump-noise", "c.toml", "--out", "n"], dir.path());
    assert!(out.status.success());
    for r in 0..3 {
        let bytes = fs::read(dir.path().join(format!("n/noise_{r}.bin"))).unwrap();
        let path = NoisePath::read_dump(bytes.as_slice()).unwrap().into_path().unwrap();
        assert_eq!(path.steps(), 256);
        assert_eq!(path.modes(), 6);
    }
}

#[test]
fn empty_record_outputs_are_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let record = kramers_core::harness::RunRecord::empty(&ExperimentConfig::default());
    write_outputs(&record, dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join("errors.csv")).unwrap(),
        "nu,alpha,seed,t,l2_error\n"
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("audit.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn split_audit_and_scaling_kinds_run() {
    let audit = parse_config(
        "kind = \"split_audit\"\n[basis]\nmodes = 4\n[model]\nalpha = 0.5\nnu = [0.1, 0.01, 0.001]\n[time]\nsteps = 256\nsamples = 4\n[ensemble]\nreplicas = 2\n",
    )
    .unwrap();
    let r = run_experiment(&audit).unwrap();
    assert_eq!(r.audit.len(), 3 * 2 * 5);
    for name in ["v1_term", "v2_boundary", "v2_integral", "v3_residual"] {
        assert!(r.rate(&format!("split_audit_{name}")).is_some(), "{name}");
    }
    let scaling = parse_config(
        "kind = \"component_scaling\"\n[basis]\nmodes = 4\n[model]\nnu = [0.1, 0.01, 0.001]\n[time]\nsteps = 256\nsamples = 4\n[ensemble]\nreplicas = 2\n",
    )
    .unwrap();
    let r = run_experiment(&scaling).unwrap();
    assert_eq!(r.means("sup_u_h1").len(), 3);
    assert_eq!(r.means("sup_mean_v2_hm1").len(), 3);
}

#[test]
fn kind_and_alpha_must_agree() {
    assert!(parse_config("kind = \"full_vs_detwave\"\n[model]\nalpha = 0.5\n").is_err());
    assert!(parse_config("kind = \"full_vs_heat\"\n[model]\nalpha = 2.0\n").is_err());
    assert!(parse_config("kind = \"full_vs_detwave\"\n[model]\nalpha = 2.0\n").is_ok());
}
