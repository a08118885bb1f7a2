mod common;

use common::logistic_exact;
use ksjko::elliptic::EllipticConfig;
use ksjko::jko::{ModelParams, W2Backend};
use ksjko::scenarios::InitPreset;
use ksjko::scheme::*;
use ksjko::{DensityField, EntropySpec, Error, GridSpec, ReactionSpec};
use proptest::prelude::*;

fn model(chi: f64) -> ModelParams {
    ModelParams {
        chi,
        lambda: 1.01,
        elliptic: EllipticConfig::NeumannScreened { lambda: 1.0 },
        entropy: EntropySpec::boltzmann(),
        reaction: ReactionSpec::new(1.0, 1.0, 2.0).unwrap(),
    }
}

fn line(n: usize) -> GridSpec {
    GridSpec::line(1.0, n).unwrap()
}

#[test]
fn steady_state_is_preserved() {
    let m = model(0.5);
    let rho0 = InitPreset::uniform().build(line(32), &m.reaction).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.2)).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.diagnostics.len(), 20);
    for rho in &traj.full_steps {
        assert!(rho.linf_distance(&rho0).unwrap() <= 1e-12);
    }
    for phi in TestFunction::ALL {
        assert!(weak_residual(&traj, phi, 0.0, 0.2).unwrap() <= 1e-8, "{}", phi.name());
    }
    let report = traj.report.clone().unwrap();
    let holder = check_holder(&traj, &report, 20).unwrap();
    assert!(holder.passed && holder.max_ratio <= 1e-20, "{holder:?}");
}

#[test]
fn uniform_data_follows_the_logistic_curve() {
    let m = model(0.5);
    let tau = 0.02;
    let rho0 = DensityField::constant(line(8), 0.3).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, tau, 1.0)).unwrap();
    for (k, rho) in traj.full_steps.iter().enumerate() {
        let exact = logistic_exact(0.3, 1.0, 1.0, k as f64 * tau).values;
        let v = rho.values()[0];
        assert!(rho.values().iter().all(|&x| x == v));
        assert!((v - exact).abs() <= 5.0 * tau, "step {k}: {v} vs {exact}");
    }
}

#[test]
fn large_data_decreases_in_sup_norm() {
    // eta = 2.15 for this model, so uniform data at 3 must come down.
    let m = model(0.5);
    let rho0 = InitPreset::Uniform { value: Some(3.0) }
        .build(line(16), &m.reaction)
        .unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.02, 0.4)).unwrap();
    let linf: Vec<f64> = traj.full_steps.iter().map(|r| r.linf()).collect();
    assert!(linf.windows(2).all(|w| w[1] < w[0]), "{linf:?}");
}

#[test]
fn bump_run_passes_every_check() {
    let m = model(0.5);
    let rho0 = InitPreset::bump().build(line(64), &m.reaction).unwrap();
    let mut cfg = SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.3);
    cfg.el_residual = true;
    let traj = run(&rho0, &cfg).unwrap();
    let report = traj.report.clone().unwrap();
    assert!(check_uniform_bounds(&traj, &report, 1e-4).passed);
    let l1 = check_l1_bound(&traj, &report, 1e-8);
    assert!(l1.passed, "{l1:?}");
    assert!(check_two_solutions_gap(&traj, &report, 1e-9).passed);
    assert!(check_energy_gaps(&traj, &report).unwrap().passed);
    assert!(check_flux_bound(&traj, &report).unwrap().passed);
    assert!(check_holder(&traj, &report, 50).unwrap().passed);
    for d in &traj.diagnostics {
        assert!(d.el_residual.is_finite() && d.el_residual < 1e-2);
        assert!(d.diss_slack_w2 >= -1e-6 * (1.0 + d.e1_half.abs()));
        assert!(d.diss_slack_fr >= -1e-6 * (1.0 + d.e2.abs()));
    }
}

#[test]
fn small_mass_grows_but_stays_below_xi() {
    let m = model(0.5);
    let rho0 = DensityField::from_fn(line(32), |x, _| 0.05 + 0.05 * (3.0 * x).sin().abs()).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.05, 2.0)).unwrap();
    let report = traj.report.clone().unwrap();
    let chk = check_l1_bound(&traj, &report, 1e-8);
    assert!(chk.passed, "{chk:?}");
    assert!(traj.full_steps.last().unwrap().mass() > 4.0 * rho0.mass());
}

#[test]
fn enforced_thresholds_reject_bad_configurations() {
    let rho0 = InitPreset::perturbed_uniform(0.1, 1)
        .build(line(32), &model(0.5).reaction)
        .unwrap();
    let mut cfg = SchemeConfig::new(model(0.5), W2Backend::Quantile1d, 0.2, 1.0);
    cfg.enforce_thresholds = true;
    assert!(matches!(run(&rho0, &cfg), Err(Error::ThresholdViolation(_))));
    // lambda chi above chi* = beta
    let mut cfg = SchemeConfig::new(model(1.2), W2Backend::Quantile1d, 0.001, 0.01);
    cfg.enforce_thresholds = true;
    assert!(matches!(run(&rho0, &cfg), Err(Error::ThresholdViolation(_))));
    // without enforcement the same run goes through, report or not
    cfg.enforce_thresholds = false;
    let traj = run(&rho0, &cfg).unwrap();
    assert!(traj.report.is_none());
}

#[test]
fn invalid_inputs_are_errors() {
    let m = model(0.5);
    let zero = DensityField::constant(line(8), 0.0).unwrap();
    assert!(matches!(
        run(&zero, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.1)),
        Err(Error::ZeroMass)
    ));
    let rho0 = DensityField::constant(line(8), 1.0).unwrap();
    let mut cfg = SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.1);
    cfg.sentinel_factor = 1.0;
    assert!(run(&rho0, &cfg).is_err());
    let cfg = SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.0);
    assert!(run(&rho0, &cfg).is_err());
}

#[test]
fn replay_is_bitwise_identical() {
    let m = model(0.5);
    let rho0 = InitPreset::two_bumps().build(line(48), &m.reaction).unwrap();
    for backend in [W2Backend::Quantile1d, W2Backend::Entropic] {
        let cfg = SchemeConfig::new(m, backend, 0.01, 0.1);
        let a = run(&rho0, &cfg).unwrap();
        let b = run(&rho0, &cfg).unwrap();
        assert_eq!(a.diagnostics_csv(), b.diagnostics_csv());
        for (x, y) in a.full_steps.iter().zip(&b.full_steps) {
            assert_eq!(x.values(), y.values());
        }
    }
}

#[test]
fn diagnostics_csv_layout() {
    let m = model(0.5);
    let rho0 = InitPreset::bump().build(line(32), &m.reaction).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 0.05)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diag.csv");
    traj.write_diagnostics(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], DIAGNOSTICS_HEADER);
    assert_eq!(lines.len(), 1 + 5);
    let cols = DIAGNOSTICS_HEADER.split(',').count();
    for (k, l) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = l.split(',').collect();
        assert_eq!(fields.len(), cols);
        assert_eq!(fields[0], (k + 1).to_string());
        let time: f64 = fields[1].parse().unwrap();
        assert_eq!(time, traj.diagnostics[k].time);
    }
}

#[test]
fn interpolant_is_right_continuous_on_steps() {
    let m = model(0.5);
    let rho0 = InitPreset::bump().build(line(16), &m.reaction).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Quantile1d, 0.1, 0.3)).unwrap();
    assert!(std::ptr::eq(traj.full_at(0.0), &traj.full_steps[0]));
    assert!(std::ptr::eq(traj.full_at(0.05), &traj.full_steps[1]));
    assert!(std::ptr::eq(traj.full_at(0.1), &traj.full_steps[1]));
    assert!(std::ptr::eq(traj.full_at(0.25), &traj.full_steps[3]));
    assert!(std::ptr::eq(traj.full_at(9.0), &traj.full_steps[3]));
}

#[test]
fn aggregation_trips_a_low_sentinel() {
    // Far above chi*: no thresholds, C1 falls back to 2 max(s*, ||rho0||).
    let m = model(50.0);
    let rho0 = InitPreset::bump().build(line(64), &m.reaction).unwrap();
    let mut cfg = SchemeConfig::new(m, W2Backend::Quantile1d, 2e-4, 0.2);
    cfg.sentinel_factor = 1.05;
    let traj = run(&rho0, &cfg).unwrap();
    assert!(traj.report.is_none());
    match traj.status {
        RunStatus::BlowupSentinel { step, linf, sentinel } => {
            assert_eq!(step, traj.diagnostics.len());
            assert!(step < cfg.steps());
            assert!(linf > sentinel);
            assert_eq!(sentinel, traj.sentinel);
        }
        other => panic!("expected the sentinel, got {other:?}"),
    }
}

#[test]
fn two_dimensional_run() {
    let m = model(0.3);
    let grid = GridSpec::rect(1.0, 1.0, 12, 12).unwrap();
    let rho0 = InitPreset::bump().build(grid, &m.reaction).unwrap();
    let traj = run(&rho0, &SchemeConfig::new(m, W2Backend::Entropic, 0.01, 0.03)).unwrap();
    assert_eq!(traj.diagnostics.len(), 3);
    for d in &traj.diagnostics {
        assert!(d.el_residual.is_nan());
        assert!(d.linf.is_finite());
    }
    let report = traj.report.clone().unwrap();
    let l1 = check_l1_bound(&traj, &report, 1e-6);
    assert!(l1.transport_mass_drift <= 1e-6, "{l1:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn admissible_runs_respect_the_bounds(a in 0.0..0.5f64, mode in 1u32..4, chi_frac in 0.1..0.9f64) {
        let m = model(chi_frac);
        let rho0 = InitPreset::perturbed_uniform(a, mode).build(line(32), &m.reaction).unwrap();
        let mut cfg = SchemeConfig::new(m, W2Backend::Quantile1d, 0.01, 1.0);
        let tmax = ksjko::ThresholdReport::compute(cfg.threshold_inputs(&rho0)).unwrap().tau_max();
        cfg.tau = 0.5 * tmax;
        cfg.t_final = 20.0 * cfg.tau;
        cfg.enforce_thresholds = true;
        let traj = run(&rho0, &cfg).unwrap();
        let report = traj.report.clone().unwrap();
        prop_assert!(check_uniform_bounds(&traj, &report, 1e-4).passed);
        prop_assert!(check_l1_bound(&traj, &report, 1e-8).passed);
        prop_assert!(check_two_solutions_gap(&traj, &report, 1e-9).passed);
    }
}
