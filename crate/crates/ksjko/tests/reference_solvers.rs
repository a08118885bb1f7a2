//! Self-tests of the oracles in `common`.

mod common;

use common::*;
use std::f64::consts::{E, PI};

#[test]
fn logistic_closed_form() {
    let cap = logistic_exact(2.0, 2.0, 1.0, 3.7);
    assert!((cap.values - 2.0).abs() <= cap.error_bound);
    assert_eq!(logistic_exact(0.3, 1.0, 1.0, 0.0).values, 0.3);
    let v = logistic_exact(0.5, 1.0, 1.0, 1.0);
    assert!((v.values - E / (1.0 + E)).abs() < 1e-15);
    let rk = rk4_reaction(0.5, 1.0, 1.0, 2.0, 1.0, 1000);
    assert!((rk.values - v.values).abs() < 1e-10);
    assert!(v.error_bound > 0.0 && rk.error_bound > 0.0);
}

#[test]
fn rk4_properties() {
    for &(rho0, alpha, beta, t) in &[(0.1, 1.0, 1.0, 2.0), (3.0, 0.5, 2.0, 1.5), (1.0, 2.0, 0.5, 0.7)] {
        let exact = logistic_exact(rho0, alpha, beta, t).values;
        let rk = rk4_reaction(rho0, alpha, beta, 2.0, t, 1000);
        assert!((rk.values - exact).abs() < 1e-10, "{rho0} {alpha} {beta}");
        assert!((rk.values - exact).abs() <= rk.error_bound.max(1e-13));
    }
    // F'(rho0) = 0
    let s = (2.0f64 / 0.5).powf(1.0 / 2.0);
    let rk = rk4_reaction(s, 2.0, 0.5, 3.0, 4.0, 100);
    assert!((rk.values - s).abs() < 1e-13);
    // monotone approach to s* from both sides
    for rho0 in [0.2, 5.0] {
        let mut last = rho0;
        for k in 1..=20 {
            let v = rk4_reaction(rho0, 1.0, 1.0, 1.5, 0.2 * k as f64, 50).values;
            if rho0 < 1.0 {
                assert!(v > last && v < 1.0);
            } else {
                assert!(v < last && v > 1.0);
            }
            last = v;
        }
    }
}

#[test]
fn crank_nicolson_uniform_matches_rk4() {
    let rho0 = vec![0.4; 32];
    let cn = crank_nicolson_rd(&rho0, 1.0, 1.0, 1.0, 2.0, 1e-3, 0.5);
    let rk = rk4_reaction(0.4, 1.0, 1.0, 2.0, 0.5, 500).values;
    for v in &cn.values {
        // AB2 is second order: 1e-3^2 scale error
        assert!((v - rk).abs() < 1e-6, "{v} {rk}");
    }
}

#[test]
fn crank_nicolson_heat_series() {
    let n = 128;
    let series = |x: f64, t: f64| {
        1.0 + 0.5 * (-PI * PI * t).exp() * (PI * x).cos() + 0.25 * (-9.0 * PI * PI * t).exp() * (3.0 * PI * x).cos()
    };
    let x: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
    let rho0: Vec<f64> = x.iter().map(|&x| series(x, 0.0)).collect();
    let cn = crank_nicolson_rd(&rho0, 1.0, 0.0, 1e-12, 2.0, 5e-5, 0.1);
    let err = cn
        .values
        .iter()
        .zip(&x)
        .map(|(v, &x)| (v - series(x, 0.1)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err:e}");
    // self-consistency under halving of the reference step
    assert!(cn.error_bound < 1e-8 * 4.0 / 3.0 + 1e-15, "{:e}", cn.error_bound);
}

#[test]
fn restrict_averages() {
    assert_eq!(restrict(&[1.0, 3.0, 2.0, 2.0], 2), vec![2.0, 2.0]);
}

#[test]
fn brute_force_chi_star_cases() {
    let two = chi_star_brute(1.0, 2.0, 2.0, 1.0);
    assert!((two.values - 2.0).abs() <= 1e-6 * 2.0, "{two:?}");
    assert!(chi_star_brute(1.0, 1.0, 3.0, 1.0).values.is_infinite());
    assert!(chi_star_brute(1.0, 1.0, 2.001, 1.0).values.is_infinite());
    // 1 < r < 2, small data: maximizer M = alpha (r-1)/(2-r)
    let (a, b, r) = (1.0f64, 1.0f64, 1.5f64);
    let m = a * (r - 1.0) / (2.0 - r);
    let want = m / ((a + m) / b).powf(1.0 / (r - 1.0));
    let got = chi_star_brute(a, b, r, 0.1);
    assert!((got.values - want).abs() <= 1e-8 * want, "{got:?} {want}");
    // large data: the two branches cross at eta_M = rho0
    let rho0 = 10.0f64;
    let m = b * rho0.powf(r - 1.0) - a;
    let got = chi_star_brute(a, b, r, rho0);
    assert!((got.values - m / rho0).abs() <= 1e-6 * m / rho0, "{got:?}");
}

#[test]
fn bisection_inverse() {
    for &(s, tau, a, b, r) in &[
        (0.7f64, 0.1, 1.0, 1.0, 2.0),
        (3.0, 0.2, 2.0, 0.5, 3.0),
        (1e-3, 0.4, 1.0, 2.0, 1.5),
    ] {
        let rho = s * (1.0f64 + 0.5 * tau * (b * s.powf(r - 1.0) - a)).powi(2);
        let inv = j_inverse_bisect(rho, tau, a, b, r);
        assert!((inv.values - s).abs() <= 1e-12 * s.max(1.0), "{inv:?}");
    }
}
