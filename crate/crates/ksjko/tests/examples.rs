//! Every example runs and produces sensible numbers.

#[path = "../examples/config_run.rs"]
mod config_run;
#[path = "../examples/elliptic_solve.rs"]
mod elliptic_solve;
#[path = "../examples/fisher_rao_step.rs"]
mod fisher_rao_step;
#[path = "../examples/metrics.rs"]
mod metrics;
#[path = "../examples/splitting_run.rs"]
mod splitting_run;
#[path = "../examples/thresholds.rs"]
mod thresholds;
#[path = "../examples/wasserstein_step.rs"]
mod wasserstein_step;

#[test]
fn thresholds_example() {
    let rep = thresholds::run_example().unwrap();
    assert!(rep.tau_max() > 0.0);
    assert!(rep.c1 >= 2.0);
}

#[test]
fn elliptic_example() {
    assert!(elliptic_solve::run_example().unwrap() < 1e-12);
}

#[test]
fn metrics_example() {
    let d = metrics::run_example().unwrap();
    // The bumps sit on a common floor, so the shift costs less than 0.3.
    assert!(d.w2 > 0.0 && d.w2 < 0.3);
    assert!(d.w2_entropic >= d.w2 - 1e-6);
    assert!(d.wfr_upper <= d.fr + 1e-12);
}

#[test]
fn fisher_rao_example() {
    let next = fisher_rao_step::run_example().unwrap();
    assert!(next.linf() < 2.7);
}

#[test]
fn wasserstein_example() {
    let steps = wasserstein_step::run_example().unwrap();
    let mass = steps[0].rho.mass();
    for step in &steps {
        assert!(step.e1_rho <= step.e1_g);
        assert!((step.rho.mass() - mass).abs() < 1e-9 * mass);
    }
}

#[test]
fn splitting_example() {
    let traj = splitting_run::run_example().unwrap();
    assert_eq!(traj.diagnostics.len(), 50);
}

#[test]
fn config_example() {
    let m = config_run::run_example().unwrap();
    assert_eq!(m.steps_completed, 30);
}
