//! Transport, Fisher-Rao and WFR distances between two densities.
//!
//! `cargo run --example metrics`

use ksjko::metrics::{fr_distance, w2_1d, w2_entropic, wfr_chains};
use ksjko::{DensityField, GridSpec};

pub struct Distances {
    pub w2: f64,
    pub w2_entropic: f64,
    pub fr: f64,
    pub wfr_upper: f64,
}

pub fn run_example() -> ksjko::Result<Distances> {
    let grid = GridSpec::line(1.0, 200)?;
    let bump = |c: f64| move |x: f64, _: f64| 0.1 + (-((x - c) / 0.1).powi(2)).exp();
    let a = DensityField::from_fn(grid, bump(0.3))?;
    let b = DensityField::from_fn(grid, bump(0.6))?;
    // Transport needs equal masses; the tails are cut differently.
    let b = DensityField::new(grid, b.values().iter().map(|v| v * a.mass() / b.mass()).collect())?;
    let w2 = w2_1d(&a, &b)?;
    let w2e = w2_entropic(&a, &b, 1e-3)?;
    let fr = fr_distance(&a, &b)?;
    let chains = wfr_chains(&a, &b)?;
    println!("W2            {w2:.6}");
    println!("W2 (eps=1e-3) {w2e:.6}");
    println!("FR            {fr:.6}");
    println!("WFR <=        {:.6}", chains.min());
    Ok(Distances {
        w2,
        w2_entropic: w2e,
        fr,
        wfr_upper: chains.min(),
    })
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
