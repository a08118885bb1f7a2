//! Admissibility thresholds for a logistic source and the step sizes they
//! allow.
//!
//! `cargo run --example thresholds`

use ksjko::potentials::chi_star;
use ksjko::{EntropySpec, ReactionSpec, ThresholdInputs, ThresholdReport};

pub fn run_example() -> ksjko::Result<ThresholdReport> {
    let reaction = ReactionSpec::new(1.0, 1.0, 2.0)?;
    for r in [1.5, 2.0, 3.0] {
        let f = ReactionSpec::new(1.0, 1.0, r)?;
        let cs = chi_star(2.0, &f);
        println!("r = {r}: chi_star = {} ({})", cs.value, cs.case.label());
    }
    let report = ThresholdReport::compute(ThresholdInputs {
        rho0_linf: 2.0,
        rho0_l1: 1.2,
        omega: 1.0,
        dim: 1,
        chi: 0.5,
        lambda: 1.01,
        entropy: EntropySpec::boltzmann(),
        reaction,
        t_final: 1.0,
    })?;
    println!(
        "M* = {:.6}, eta = {:.6}, xi = {:.6}",
        report.m_star, report.eta, report.xi.xi
    );
    println!("tau_max = {:.6e}", report.tau_max());
    println!("C1 = {:.6}, C2 = {:.6}", report.c1, report.c2);
    Ok(report)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
