//! One drift-diffusion step with both backends.
//!
//! `cargo run --example wasserstein_step`

use ksjko::elliptic::EllipticConfig;
use ksjko::jko::{w2_step, ModelParams, W2Backend, W2StepConfig, W2StepOutcome};
use ksjko::scenarios::InitPreset;
use ksjko::{EntropySpec, GridSpec, ReactionSpec};

pub fn run_example() -> ksjko::Result<Vec<W2StepOutcome>> {
    let model = ModelParams {
        chi: 0.5,
        lambda: 1.01,
        elliptic: EllipticConfig::NeumannScreened { lambda: 1.0 },
        entropy: EntropySpec::boltzmann(),
        reaction: ReactionSpec::new(1.0, 1.0, 2.0)?,
    };
    let g = InitPreset::bump().build(GridSpec::line(1.0, 128)?, &model.reaction)?;
    let tau = 0.01;
    let mut out = Vec::new();
    for backend in [W2Backend::Quantile1d, W2Backend::Entropic] {
        let step = w2_step(&g, &model, &W2StepConfig::new(backend, tau))?;
        println!(
            "{backend:?}: E1 {:.6} -> {:.6}, W2^2 = {:.3e}, slack = {:.3e}, sup = {:.4}",
            step.e1_g,
            step.e1_rho,
            step.w2_sq,
            step.dissipation_slack(tau),
            step.rho.linf()
        );
        out.push(step);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
