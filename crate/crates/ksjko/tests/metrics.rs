mod common;

use common::{c_transform_golden, integrate_simpson};
use ksjko::metrics::{
    fr_distance, sinkhorn, w2_1d, w2_1d_full, w2_entropic, wfr_chains, wfr_upper_bound, SinkhornOptions,
};
use ksjko::{DensityField, GridSpec};
use proptest::prelude::*;

fn block(len: f64, n: usize, lo: f64, hi: f64) -> DensityField {
    let g = GridSpec::line(len, n).unwrap();
    DensityField::from_fn(g, |x, _| if x > lo && x < hi { 1.0 } else { 0.0 }).unwrap()
}

fn field(values: Vec<f64>, len: f64) -> DensityField {
    let g = GridSpec::line(len, values.len()).unwrap();
    DensityField::new(g, values).unwrap()
}

fn normalized(values: Vec<f64>, len: f64, mass: f64) -> DensityField {
    let f = field(values, len);
    let m = f.mass();
    f.scaled(mass / m).unwrap()
}

#[test]
fn translated_blocks_are_unit_distance() {
    let a = block(2.0, 128, 0.0, 1.0);
    let b = block(2.0, 128, 1.0, 2.0);
    assert!((w2_1d(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(w2_1d(&a, &a).unwrap(), 0.0);
}

#[test]
fn truncated_gaussians_shift_by_mean_gap() {
    let g = GridSpec::line(10.0, 512).unwrap();
    let gauss = |mu: f64| DensityField::from_fn(g, move |x, _| (-(x - mu).powi(2) / (2.0 * 0.25)).exp()).unwrap();
    let a = gauss(3.0);
    let b = gauss(5.0);
    let b = b.scaled(a.mass() / b.mass()).unwrap();
    let a = a.scaled(1.0 / a.mass()).unwrap();
    let b = b.scaled(1.0 / b.mass()).unwrap();
    let w = w2_1d(&a, &b).unwrap();
    assert!((w - 2.0).abs() < 2e-2, "{w}");
}

#[test]
fn mass_mismatch_rejected() {
    let a = block(1.0, 16, 0.0, 0.5);
    let b = a.scaled(1.01).unwrap();
    assert!(w2_1d(&a, &b).is_err());
}

#[test]
fn plan_arrays_are_monotone_and_push_forward() {
    let a = normalized((0..64).map(|i| 1.0 + (i as f64 * 0.3).sin().abs()).collect(), 1.0, 1.0);
    let b = normalized(
        (0..64)
            .map(|i| if i % 7 == 0 { 0.0 } else { 0.5 + i as f64 / 64.0 })
            .collect(),
        1.0,
        1.0,
    );
    let sol = w2_1d_full(&a, &b).unwrap();
    assert_eq!(sol.plan.nodes.len(), 256);
    for w in sol.plan.source_quantiles.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for w in sol.plan.target_quantiles.windows(2) {
        assert!(w[1] >= w[0]);
    }
    assert!(sol.plan.pushforward_defect(&b) < 1e-8);
}

#[test]
fn entropic_translation_close_to_exact() {
    let a = block(2.0, 256, 0.0, 1.0);
    let b = block(2.0, 256, 1.0, 2.0);
    let w = w2_entropic(&a, &b, 1e-3).unwrap();
    assert!((w * w - 1.0).abs() <= 0.05, "{w}");
}

#[test]
fn entropic_symmetric_and_annealing_monotone() {
    let a = normalized((0..48).map(|i| 1.0 + (i as f64 / 5.0).cos()).collect(), 1.0, 1.0);
    let b = normalized((0..48).map(|i| 0.2 + (i as f64 / 48.0).powi(2)).collect(), 1.0, 1.0);
    let opts = SinkhornOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let ab = sinkhorn(&a, &b, 1e-2, opts).unwrap().cost;
    let ba = sinkhorn(&b, &a, 1e-2, opts).unwrap().cost;
    assert!((ab - ba).abs() <= 1e-10);
    let mut prev = f64::INFINITY;
    for eps in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let c = sinkhorn(&a, &b, eps, opts).unwrap().cost;
        assert!(c <= prev + 1e-10, "eps {eps}: {c} > {prev}");
        prev = c;
    }
    let exact = w2_1d(&a, &b).unwrap().powi(2);
    assert!((prev - exact).abs() < 1e-2);
}

#[test]
fn entropic_self_cost_vanishes() {
    let a = normalized((0..32).map(|i| 1.0 + (i as f64 / 3.0).sin().abs()).collect(), 1.0, 1.0);
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 3e-3, 1e-3] {
        let c = sinkhorn(&a, &a, eps, SinkhornOptions::default()).unwrap().cost;
        assert!(c <= prev);
        assert!(c <= eps * 32.0, "eps {eps}: {c}");
        prev = c;
    }
}

#[test]
fn fisher_rao_constant_fields() {
    let g = GridSpec::line(1.0, 8).unwrap();
    let a = DensityField::constant(g, 1.0).unwrap();
    let b = DensityField::constant(g, 4.0).unwrap();
    assert!((fr_distance(&a, &b).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(fr_distance(&a, &a).unwrap(), 0.0);
    let chains = wfr_chains(&a, &b).unwrap();
    assert!((chains.via_target.unwrap() - 8f64.sqrt()).abs() < 1e-12);
    assert!(chains.w2.is_none());
    assert!(wfr_upper_bound(&a, &b).unwrap() <= 2.0 + 1e-14);
}

#[test]
fn wfr_of_translated_blocks_below_w2() {
    let a = block(2.0, 64, 0.0, 1.0);
    let b = block(2.0, 64, 1.0, 2.0);
    assert!(wfr_upper_bound(&a, &b).unwrap() <= 1.0 + 1e-12);
    assert_eq!(wfr_upper_bound(&a, &a).unwrap(), 0.0);
}

fn density_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.05f64..3.0], n)
        .prop_filter("needs mass", |v| v.iter().sum::<f64>() > 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn w2_triangle(a in density_strategy(24), b in density_strategy(24), c in density_strategy(24)) {
        let (a, b, c) = (normalized(a, 1.5, 1.0), normalized(b, 1.5, 1.0), normalized(c, 1.5, 1.0));
        let ab = w2_1d(&a, &b).unwrap();
        let bc = w2_1d(&b, &c).unwrap();
        let ac = w2_1d(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-8);
    }

    #[test]
    fn fr_triangle(a in density_strategy(16), b in density_strategy(16), c in density_strategy(16)) {
        let (a, b, c) = (field(a, 1.0), field(b, 1.0), field(c, 1.0));
        let ab = fr_distance(&a, &b).unwrap();
        let bc = fr_distance(&b, &c).unwrap();
        let ac = fr_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn wfr_bound_below_fr_and_w2(a in density_strategy(20), b in density_strategy(20), mass in 0.2f64..5.0) {
        let a = normalized(a, 1.0, 1.0);
        let b_eq = normalized(b.clone(), 1.0, 1.0);
        let b_un = normalized(b, 1.0, mass);
        let ub = wfr_upper_bound(&a, &b_eq).unwrap();
        prop_assert!(ub <= fr_distance(&a, &b_eq).unwrap() + 1e-14);
        prop_assert!(ub <= w2_1d(&a, &b_eq).unwrap() + 1e-14);
        prop_assert!(wfr_upper_bound(&a, &b_un).unwrap() <= fr_distance(&a, &b_un).unwrap() + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kantorovich_duality(a in density_strategy(12), b in density_strategy(12)) {
        let len = 1.0;
        let (a, b) = (normalized(a, len, 1.0), normalized(b, len, 1.0));
        let sol = w2_1d_full(&a, &b).unwrap();
        let pot = &sol.potential;
        let phi = |x: f64| pot.eval(x);
        let lhs = integrate_simpson(&a, &phi, 4) + integrate_simpson(&b, &|y| c_transform_golden(&phi, y, len), 4);
        let scale = sol.w2_sq.max(1e-6);
        prop_assert!((lhs - sol.w2_sq).abs() <= 1e-6 * scale, "{} vs {}", lhs, sol.w2_sq);
    }
}
