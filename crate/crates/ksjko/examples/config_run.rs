//! Runs `examples/configs/two_bumps.toml` the way `ksjko run` does and
//! lists what ends up on disk.
//!
//! `cargo run --example config_run`

use std::path::Path;

use ksjko::cli::{cmd_run, RunConfig, RunManifest};

pub fn run_example() -> ksjko::Result<RunManifest> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/two_bumps.toml");
    let cfg = RunConfig::load(&config)?;
    println!("config hash {}", cfg.hash());
    let out = tempfile::tempdir()?;
    let outcome = cmd_run(&config, Some(out.path()))?;
    let m = &outcome.manifest;
    println!("{:?} after {} steps of tau = {}", m.status, m.steps_completed, m.tau);
    let mut files: Vec<String> = std::fs::read_dir(out.path().join("snapshots"))?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("snapshots: {}", files.join(" "));
    Ok(outcome.manifest)
}

#[allow(dead_code)]
fn main() -> ksjko::Result<()> {
    run_example().map(|_| ())
}
