//! A full splitting run from a bump, with the per-step diagnostics.
//!
//! `cargo run --example splitting_run`

use ksjko::elliptic::EllipticConfig;
use ksjko::jko::{ModelParams, W2Backend};
use ksjko::scenarios::InitPreset;
use ksjko::scheme::{run, SchemeConfig, Trajectory};
use ksjko::{EntropySpec, GridSpec, ReactionSpec};

pub fn run_example() -> ksjko::Result<Trajectory> {
    let model = ModelParams {
        chi: 0.5,
        lambda: 1.01,
        elliptic: EllipticConfig::NeumannScreened { lambda: 1.0 },
        entropy: EntropySpec::boltzmann(),
        reaction: ReactionSpec::new(1.0, 1.0, 2.0)?,
    };
    let rho0 = InitPreset::bump().build(GridSpec::line(1.0, 128)?, &model.reaction)?;
    let mut cfg = SchemeConfig::new(model, W2Backend::Quantile1d, 0.01, 0.5);
    cfg.enforce_thresholds = true;
    let traj = run(&rho0, &cfg)?;
    if let Some(rep) = &traj.report {
        println!(
            "tau = {} (tau_max = {:.4e}), sentinel = {:.3}",
            cfg.tau,
            rep.tau_max(),
            traj.sentinel
        );
    }
    println!("{:>5} {:>8} {:>10} {:>10} {:>12}", "step", "t", "mass", "sup", "E1");
    for d in traj.diagnostics.iter().step_by(10) {
        println!(
            "{:>5} {:>8.3} {:>10.6} {:>10.6} {:>12.6}",
            d.step, d.time, d.mass, d.linf, d.e1
        );
    }
    println!("status: {:?}", traj.status);
    Ok(traj)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
