//! One reaction step: pointwise implicit logistic update and the bounds it
//! obeys.
//!
//! `cargo run --example fisher_rao_step`

use ksjko::jko::{fr_step, fr_step_estimates};
use ksjko::metrics::fr_distance_sq;
use ksjko::potentials::select_m_star;
use ksjko::{DensityField, GridSpec, ReactionSpec};

/// Returns the step result.
pub fn run_example() -> ksjko::Result<DensityField> {
    let f = ReactionSpec::new(1.0, 1.0, 2.0)?;
    let tau = 0.05;
    let grid = GridSpec::line(1.0, 64)?;
    let rho = DensityField::from_fn(grid, |x, _| 0.2 + 2.5 * x)?;
    let next = fr_step(&rho, &f, tau)?;
    println!("mass {:.6} -> {:.6}", rho.mass(), next.mass());
    println!("sup  {:.6} -> {:.6}", rho.linf(), next.linf());
    println!("FR^2 = {:.6e}", fr_distance_sq(&rho, &next)?);
    let m = select_m_star(rho.linf(), &f, 1.01, 0.5)?;
    let chk = fr_step_estimates(&rho, &next, &f, tau, m)?;
    println!("estimates hold: {}", chk.passed());
    Ok(next)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
