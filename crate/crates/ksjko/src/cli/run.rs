//! `ksjko run`: one scheme run with its diagnostics, snapshots and manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SnapshotFormat};
use super::ExitStatus;
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::potentials::ThresholdReport;
use crate::scheme::{run, RunStatus, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestStatus {
    Completed,
    BlowupSentinel,
    ThresholdViolation,
    SolverFailure,
}

impl ManifestStatus {
    pub fn exit(&self) -> ExitStatus {
        match self {
            ManifestStatus::Completed => ExitStatus::Success,
            ManifestStatus::BlowupSentinel => ExitStatus::Blowup,
            ManifestStatus::ThresholdViolation => ExitStatus::ThresholdViolation,
            ManifestStatus::SolverFailure => ExitStatus::SolverFailure,
        }
    }
}

/// Summary written next to the outputs when a run ends. `wall_time_s` is
/// the only field that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub status: ManifestStatus,
    pub message: Option<String>,
    pub steps_completed: usize,
    pub tau: f64,
    pub report: Option<ThresholdReport>,
    pub wall_time_s: f64,
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn snapshot_steps(total: usize, every: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = if every == 0 {
        vec![0]
    } else {
        (0..=total).step_by(every).collect()
    };
    if steps.last() != Some(&total) {
        steps.push(total);
    }
    steps
}

fn snapshot_json(rho: &DensityField) -> String {
    #[derive(Serialize)]
    struct Snapshot<'a> {
        lengths: &'a [f64],
        cells: &'a [usize],
        values: &'a [f64],
    }
    let g = rho.grid();
    serde_json::to_string(&Snapshot {
        lengths: g.lengths(),
        cells: g.cells(),
        values: rho.values(),
    })
    .expect("snapshot serializes")
}

fn write_outputs(cfg: &RunConfig, dir: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(&dir.join("diagnostics.csv"), traj.diagnostics_csv().as_bytes())?;
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps)?;
    let total = traj.full_steps.len() - 1;
    for step in snapshot_steps(total, cfg.output.save_every) {
        let rho = &traj.full_steps[step];
        for fmt in &cfg.output.formats {
            match fmt {
                SnapshotFormat::Csv => {
                    write_atomic(&snaps.join(format!("rho_{step:06}.csv")), rho.to_csv().as_bytes())?
                }
                SnapshotFormat::Json => write_atomic(
                    &snaps.join(format!("rho_{step:06}.json")),
                    snapshot_json(rho).as_bytes(),
                )?,
            }
        }
    }
    Ok(())
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

/// Loads `config`, runs it and writes every output. Errors are only
/// returned for problems before the run starts (config, output directory);
/// everything after that ends up in the manifest.
pub fn cmd_run(config: &Path, out: Option<&Path>) -> Result<RunOutcome> {
    let cfg = RunConfig::load(config)?;
    let base = config.parent().unwrap_or_else(|| Path::new("."));
    let scheme = cfg.scheme_config()?;
    let rho0 = cfg.initial_density(base)?;
    let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
        if cfg.output.dir.is_absolute() {
            cfg.output.dir.clone()
        } else {
            base.join(&cfg.output.dir)
        }
    });
    std::fs::create_dir_all(&out_dir)?;

    let start = Instant::now();
    let result = run(&rho0, &scheme);
    let mut report = ThresholdReport::compute(scheme.threshold_inputs(&rho0)).ok();
    let (status, message, steps) = match &result {
        Ok(traj) => {
            write_outputs(&cfg, &out_dir, traj)?;
            report = traj.report.clone();
            match traj.status {
                RunStatus::Completed => (ManifestStatus::Completed, None, traj.diagnostics.len()),
                RunStatus::BlowupSentinel { step, linf, sentinel } => (
                    ManifestStatus::BlowupSentinel,
                    Some(format!(
                        "||rho||_inf = {linf} passed the sentinel {sentinel} at step {step}"
                    )),
                    traj.diagnostics.len(),
                ),
            }
        }
        Err(Error::ThresholdViolation(msg)) => (ManifestStatus::ThresholdViolation, Some(msg.clone()), 0),
        Err(e) => {
            let steps = match e {
                Error::AtStep { step, .. } => step - 1,
                _ => 0,
            };
            (ManifestStatus::SolverFailure, Some(e.to_string()), steps)
        }
    };
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        status,
        message,
        steps_completed: steps,
        tau: scheme.tau,
        report,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out_dir.join("manifest.json"), json.as_bytes())?;
    Ok(RunOutcome { manifest, out_dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_schedule() {
        assert_eq!(snapshot_steps(25, 10), vec![0, 10, 20, 25]);
        assert_eq!(snapshot_steps(20, 10), vec![0, 10, 20]);
        assert_eq!(snapshot_steps(7, 0), vec![0, 7]);
        assert_eq!(snapshot_steps(0, 0), vec![0]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
