//! End-to-end tests of the `ksjko` command set, in process through
//! `main_with_args` and once through the built binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use ksjko::cli::{main_with_args, ExitStatus, RunManifest};
use ksjko::{DensityField, GridSpec, ThresholdReport};

struct Output {
    status: ExitStatus,
    stdout: String,
    stderr: String,
}

fn ksjko(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["ksjko"];
    argv.extend_from_slice(args);
    let status = main_with_args(argv, &mut out, &mut err);
    Output {
        status,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

const STEADY: &str = r#"
[domain]
lengths = [1.0]
cells = [32]

[model]
chi = 0.5

[reaction]
alpha = 1.0
beta = 1.0
r = 2.0

[scheme]
tau = 0.01
t_final = 0.1

[init]
preset = "uniform"

[output]
save_every = 5
formats = ["csv", "json"]
"#;

const BUMP: &str = r#"
[domain]
lengths = [1.0]
cells = [64]

[model]
chi = 0.5

[reaction]
alpha = 1.0
beta = 1.0
r = 2.0

[scheme]
tau = 0.01
t_final = 0.1

[init]
preset = "bump"
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_config(dir: &Path, text: &str, out: &str) -> (Output, PathBuf) {
    let cfg = write_config(dir, &format!("{out}.toml"), text);
    let out_dir = dir.join(out);
    let o = ksjko(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    (o, out_dir)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn steady_run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_config(tmp.path(), STEADY, "steady");
    assert_eq!(o.status, ExitStatus::Success, "{}", o.stderr);
    let m = manifest(&out);
    assert_eq!(m.steps_completed, 10);
    assert_eq!(m.config_hash.len(), 64);
    assert!(m.report.is_some());

    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("step,time,mass,linf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!((r[2] - 1.0).abs() < 1e-12, "mass {}", r[2]);
        assert!((r[3] - 1.0).abs() < 1e-12, "linf {}", r[3]);
    }
    for step in [0, 5, 10] {
        let snap = out.join(format!("snapshots/rho_{step:06}.csv"));
        let rho = DensityField::read_csv(&snap).unwrap();
        assert_eq!(rho.grid(), &GridSpec::line(1.0, 32).unwrap());
        assert!(out.join(format!("snapshots/rho_{step:06}.json")).exists());
    }
    assert!(!out.join("snapshots/rho_000003.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, da) = run_config(tmp.path(), BUMP, "a");
    let (b, db) = run_config(tmp.path(), BUMP, "b");
    assert_eq!(a.status, ExitStatus::Success);
    assert_eq!(b.status, ExitStatus::Success);
    for rel in [
        "diagnostics.csv",
        "snapshots/rho_000000.csv",
        "snapshots/rho_000010.csv",
    ] {
        assert_eq!(
            std::fs::read(da.join(rel)).unwrap(),
            std::fs::read(db.join(rel)).unwrap(),
            "{rel}"
        );
    }
    let (mut ma, mut mb) = (manifest(&da), manifest(&db));
    ma.wall_time_s = 0.0;
    mb.wall_time_s = 0.0;
    assert_eq!(ma, mb);
}

#[test]
fn oversized_tau_is_refused_before_stepping() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BUMP.replace("tau = 0.01\nt_final = 0.1", "tau = 2.0\nt_final = 10.0");
    let (o, out) = run_config(tmp.path(), &text, "big");
    assert_eq!(o.status, ExitStatus::ThresholdViolation, "{}", o.stderr);
    let m = manifest(&out);
    assert_eq!(m.steps_completed, 0);
    assert!(m.message.unwrap().contains("tau"));
    assert!(!out.join("diagnostics.csv").exists());
}

#[test]
fn missing_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, _) = run_config(tmp.path(), &BUMP.replace("beta = 1.0\n", ""), "nobeta");
    assert_eq!(o.status, ExitStatus::InvalidInput);
    assert!(o.stderr.contains("reaction.beta"), "{}", o.stderr);
}

#[test]
fn low_sentinel_reports_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BUMP.replace("chi = 0.5", "chi = 50.0").replace(
        "tau = 0.01\nt_final = 0.1",
        "tau = 2e-4\nt_final = 0.2\nenforce_thresholds = false\nsentinel_factor = 1.05",
    );
    let (o, out) = run_config(tmp.path(), &text, "blow");
    assert_eq!(o.status, ExitStatus::Blowup, "{}", o.stderr);
    let m = manifest(&out);
    assert!(m.steps_completed > 0 && m.steps_completed < 1000);
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn thresholds_json_round_trips() {
    let args = [
        "thresholds",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--r",
        "2",
        "--rho0-linf",
        "1",
        "--chi",
        "1",
        "--json",
    ];
    let o = ksjko(&args);
    assert_eq!(o.status, ExitStatus::Success, "{}", o.stderr);
    let rep: ThresholdReport = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(rep.chi_star, 2.0);
    let again: ThresholdReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(rep, again);
    assert!(rep.tau_max() > 0.0);
}

#[test]
fn thresholds_reject_bad_inputs() {
    let o = ksjko(&[
        "thresholds",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--r",
        "1",
        "--rho0-linf",
        "1",
        "--chi",
        "0.1",
    ]);
    assert_eq!(o.status, ExitStatus::InvalidInput);
    let o = ksjko(&[
        "thresholds",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--r",
        "2",
        "--rho0-linf",
        "1",
        "--chi",
        "1.5",
    ]);
    assert_eq!(o.status, ExitStatus::ThresholdViolation);
    assert!(o.stdout.contains("chi_star"));
    assert_eq!(ksjko(&["thresholds", "--alpha", "1"]).status, ExitStatus::InvalidInput);
}

#[test]
fn chi_star_cases() {
    let o = ksjko(&[
        "chi-star",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--r",
        "3",
        "--rho0-linf",
        "1",
        "--json",
    ]);
    assert_eq!(o.status, ExitStatus::Success);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["chi_star"], "inf");
    let o = ksjko(&[
        "chi-star",
        "--alpha",
        "1",
        "--beta",
        "3",
        "--r",
        "2",
        "--rho0-linf",
        "1",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["chi_star"], 3.0);
}

#[test]
fn dist_between_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let g = GridSpec::line(1.0, 50).unwrap();
    let a = DensityField::from_fn(g, |_, _| 1.0).unwrap();
    let b = DensityField::from_fn(g, |x, _| 2.0 * x).unwrap();
    let (pa, pb) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    std::fs::write(&pa, a.to_csv()).unwrap();
    std::fs::write(&pb, b.to_csv()).unwrap();
    let o = ksjko(&["dist", pa.to_str().unwrap(), pb.to_str().unwrap(), "--json"]);
    assert_eq!(o.status, ExitStatus::Success, "{}", o.stderr);
    let v: Vec<serde_json::Value> = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v.len(), 3);
    // Uniform to density 2x on [0, 1]: T(x) = sqrt(x), W2^2 = 1/30.
    let w2 = v[0]["value"].as_f64().unwrap();
    assert!((w2 - (1.0f64 / 30.0).sqrt()).abs() < 5e-3, "{w2}");
    let self_dist = ksjko(&["dist", pa.to_str().unwrap(), pa.to_str().unwrap(), "--metric", "fr"]);
    assert!(self_dist.stdout.contains("fr"));
    let missing = ksjko(&["dist", "/nonexistent.csv", pa.to_str().unwrap()]);
    assert_eq!(missing.status, ExitStatus::InvalidInput);
}

#[test]
fn validate_metrics_and_lemmas() {
    for suite in ["metrics", "lemmas"] {
        let o = ksjko(&["validate", "--suite", suite, "--jobs", "2"]);
        assert_eq!(o.status, ExitStatus::Success, "{suite}: {}", o.stderr);
        assert!(o.stdout.contains("checks passed"));
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ksjko");
    let ok = Command::new(bin)
        .args([
            "chi-star",
            "--alpha",
            "1",
            "--beta",
            "1",
            "--r",
            "2",
            "--rho0-linf",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("chi_star"));
    let bad = Command::new(bin).args(["run"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
