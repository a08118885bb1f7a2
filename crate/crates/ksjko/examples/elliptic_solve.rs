//! Screened Neumann solve for a single cosine mode. The mode is an exact
//! eigenvector of the discrete Laplacian, so the solve matches to rounding;
//! the continuum solution differs by O(h^2).
//!
//! `cargo run --example elliptic_solve`

use std::f64::consts::PI;

use ksjko::elliptic::{EllipticConfig, EllipticSolver};
use ksjko::{DensityField, GridSpec};

/// Returns the largest pointwise error against `1/L + a cos(pi x)/(L + k_h^2)`
/// with the discrete wavenumber `k_h = (2/h) sin(pi h / 2)`.
pub fn run_example() -> ksjko::Result<f64> {
    let screen = 1.0;
    let n = 128;
    let h = 1.0 / n as f64;
    let kh2 = (2.0 / h * (PI * h / 2.0).sin()).powi(2);
    let grid = GridSpec::line(1.0, n)?;
    let rho = DensityField::from_fn(grid, |x, _| 1.0 + 0.5 * (PI * x).cos())?;
    let solver = EllipticSolver::new(grid, EllipticConfig::NeumannScreened { lambda: screen })?;
    let chemo = solver.solve(&rho)?;
    let (mut err, mut cont): (f64, f64) = (0.0, 0.0);
    for (k, &c) in chemo.c.values().iter().enumerate() {
        let x = (k as f64 + 0.5) * h;
        let discrete = 1.0 / screen + 0.5 * (PI * x).cos() / (screen + kh2);
        let continuum = 1.0 / screen + 0.5 * (PI * x).cos() / (screen + PI * PI);
        err = err.max((c - discrete).abs());
        cont = cont.max((c - continuum).abs());
    }
    println!("max |c - discrete| = {err:.3e}, max |c - continuum| = {cont:.3e}");
    println!("sup |grad c| = {:.6}", chemo.grad_sup());
    Ok(err)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
