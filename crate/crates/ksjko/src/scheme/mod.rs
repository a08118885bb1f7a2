//! The alternating driver: `rho_n -> rho_{n+1/2}` by the Wasserstein step,
//! `rho_{n+1/2} -> rho_{n+1}` by the Fisher-Rao step, with per-step
//! diagnostics and the trajectory-level checks.

mod checks;
mod weak;

pub use checks::{
    check_energy_gaps, check_flux_bound, check_holder, check_l1_bound, check_two_solutions_gap, check_uniform_bounds,
    empirical_k3, trajectory_constants, EnergyGapCheck, FluxCheck, HolderCheck, L1Check, TwoSolutionsCheck,
    UniformBoundsCheck,
};
pub use weak::{weak_residual, weak_residual_terms, TestFunction, WeakResidual};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticSolver;
use crate::error::{Error, Result};
use crate::fields::{fmt17, DensityField, ScalarField};
use crate::jko::{fr_step, w2_step_el_residual, w2_step_with, ModelParams, W2Backend, W2StepConfig};
use crate::metrics::fr_distance_sq;
use crate::potentials::{ThresholdInputs, ThresholdReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub tau: f64,
    pub t_final: f64,
    pub model: ModelParams,
    pub w2: W2StepConfig,
    pub enforce_thresholds: bool,
    /// Evaluate the Euler-Lagrange residual after every Wasserstein step
    /// (1d quantile backend only).
    pub el_residual: bool,
    /// The run stops once `||rho||_inf` exceeds this multiple of `C1`.
    pub sentinel_factor: f64,
}

impl SchemeConfig {
    pub fn new(model: ModelParams, backend: W2Backend, tau: f64, t_final: f64) -> Self {
        Self {
            tau,
            t_final,
            model,
            w2: W2StepConfig::new(backend, tau),
            enforce_thresholds: false,
            el_residual: false,
            sentinel_factor: BLOWUP_FACTOR,
        }
    }

    /// `floor(T / tau)`, robust to the representation of `T / tau`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.tau * (1.0 + 1e-12)).floor() as usize
    }

    pub fn threshold_inputs(&self, rho0: &DensityField) -> ThresholdInputs {
        ThresholdInputs {
            rho0_linf: rho0.linf(),
            rho0_l1: rho0.mass(),
            omega: rho0.grid().measure(),
            dim: rho0.grid().dim(),
            chi: self.model.chi,
            lambda: self.model.lambda,
            entropy: self.model.entropy,
            reaction: self.model.reaction,
            t_final: self.t_final,
        }
    }
}

/// Values recorded after step `step` (`rho_step` is the new full step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub linf: f64,
    pub e1: f64,
    pub e2: f64,
    /// `W2^2(rho_{n}, rho_{n+1/2})`.
    pub w2_inc: f64,
    /// `FR^2(rho_{n+1/2}, rho_{n+1})`.
    pub fr_inc: f64,
    /// `NaN` when not evaluated.
    pub el_residual: f64,
    /// `E1(rho_n) - E1(rho_{n+1/2}) - W2^2/(2 tau)`.
    pub diss_slack_w2: f64,
    /// Entropic bias allowance of the W2 step (`0` for the quantile backend).
    pub w2_allowance: f64,
    /// `E2(rho_{n+1/2}) - E2(rho_{n+1}) - FR^2/(2 tau)`.
    pub diss_slack_fr: f64,
    pub half_linf: f64,
    pub half_mass: f64,
    pub e1_half: f64,
    pub e2_half: f64,
    pub outer_gap: f64,
    /// `||rho_{n+1/2} - rho_{n+1}||_inf`.
    pub half_full_gap: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,mass,linf,E1,E2,w2_inc,fr_inc,el_residual,diss_slack_w2,diss_slack_fr";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// `||rho||_inf` passed the sentinel at this step.
    BlowupSentinel {
        step: usize,
        linf: f64,
        sentinel: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: f64,
    pub times: Vec<f64>,
    /// `rho_0, rho_1, ...`
    pub full_steps: Vec<DensityField>,
    /// `rho_{1/2}, rho_{3/2}, ...`
    pub half_steps: Vec<DensityField>,
    /// `c[rho_{n+1/2}]`.
    pub c_fields: Vec<ScalarField>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub status: RunStatus,
    /// `None` when the thresholds do not exist for this configuration.
    pub report: Option<ThresholdReport>,
    pub sentinel: f64,
    pub e1_rho0: f64,
    pub model: ModelParams,
}

impl Trajectory {
    pub fn rho0(&self) -> &DensityField {
        &self.full_steps[0]
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from(DIAGNOSTICS_HEADER);
        out.push('\n');
        for d in &self.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                d.step,
                fmt17(d.time),
                fmt17(d.mass),
                fmt17(d.linf),
                fmt17(d.e1),
                fmt17(d.e2),
                fmt17(d.w2_inc),
                fmt17(d.fr_inc),
                fmt17(d.el_residual),
                fmt17(d.diss_slack_w2),
                fmt17(d.diss_slack_fr)
            );
        }
        out
    }

    pub fn write_diagnostics(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.diagnostics_csv())?;
        Ok(())
    }

    /// Piecewise-constant interpolant `rho^tau(t) = rho_{n+1}` on
    /// `(n tau, (n+1) tau]`.
    pub fn full_at(&self, t: f64) -> &DensityField {
        let k = (t / self.tau - 1e-9).ceil().max(0.0) as usize;
        &self.full_steps[k.min(self.full_steps.len() - 1)]
    }
}

/// Default multiple of `C1` past which the run is stopped.
pub const BLOWUP_FACTOR: f64 = 10.0;

/// Runs the splitting scheme.
pub fn run(rho0: &DensityField, cfg: &SchemeConfig) -> Result<Trajectory> {
    let model = &cfg.model;
    model.validate()?;
    let mut w2cfg = cfg.w2.clone();
    w2cfg.tau = cfg.tau;
    w2cfg.validate()?;
    if !(cfg.t_final > 0.0) {
        return Err(crate::error::param("t_final", cfg.t_final, "must be > 0"));
    }
    if !(rho0.mass() > 0.0) {
        return Err(Error::ZeroMass);
    }
    let report = ThresholdReport::compute(cfg.threshold_inputs(rho0));
    if cfg.enforce_thresholds {
        let rep = report.as_ref().map_err(|e| Error::ThresholdViolation(e.to_string()))?;
        let tmax = rep.tau_max();
        if !(cfg.tau < tmax) {
            return Err(Error::ThresholdViolation(format!(
                "tau = {} is not below min(tau_hat, tau_tilde, tau_2star) = {}",
                cfg.tau, tmax
            )));
        }
        let headroom = cfg.tau * model.chi * rep.full_step_bound * model.lambda;
        if !(headroom < 1.0) {
            return Err(Error::ThresholdViolation(format!(
                "cap headroom tau chi max(eta, ||rho0||) lambda = {headroom} is not below 1"
            )));
        }
    }
    let report = report.ok();
    let c1 = match &report {
        Some(r) => r.c1,
        None => 2.0 * model.reaction.carrying_capacity().max(rho0.linf()),
    };
    if !(cfg.sentinel_factor > 1.0) {
        return Err(crate::error::param(
            "sentinel_factor",
            cfg.sentinel_factor,
            "must be > 1",
        ));
    }
    let sentinel = cfg.sentinel_factor * c1;

    let solver = EllipticSolver::new(*rho0.grid(), model.elliptic)?;
    let steps = cfg.steps();
    let e1_rho0 = model.e1_with(rho0, &solver.solve_c(rho0)?);
    let mut traj = Trajectory {
        tau: cfg.tau,
        times: vec![0.0],
        full_steps: vec![rho0.clone()],
        half_steps: Vec::with_capacity(steps),
        c_fields: Vec::with_capacity(steps),
        diagnostics: Vec::with_capacity(steps),
        status: RunStatus::Completed,
        report,
        sentinel,
        e1_rho0,
        model: *model,
    };
    let at = |step: usize| {
        move |e: Error| Error::AtStep {
            step,
            source: Box::new(e),
        }
    };
    for n in 0..steps {
        let step = n + 1;
        let rho = traj.full_steps.last().unwrap();
        let w2 = w2_step_with(rho, model, &w2cfg, &solver).map_err(at(step))?;
        let half = w2.rho.clone();
        let full = fr_step(&half, &model.reaction, cfg.tau).map_err(at(step))?;
        let el_residual = if cfg.el_residual && half.grid().dim() == 1 {
            w2_step_el_residual(&half, rho, model, cfg.tau)
                .map_err(at(step))?
                .max_residual
        } else {
            f64::NAN
        };
        let c_half = solver.solve_c(&half).map_err(at(step))?;
        let c_full = solver.solve_c(&full).map_err(at(step))?;
        let e1_half = model.e1_with(&half, &c_half);
        let e2_half = model.e2(&half);
        let e2 = model.e2(&full);
        let fr_inc = fr_distance_sq(&half, &full)?;
        let time = step as f64 * cfg.tau;
        let d = StepDiagnostics {
            step,
            time,
            mass: full.mass(),
            linf: full.linf(),
            e1: model.e1_with(&full, &c_full),
            e2,
            w2_inc: w2.w2_sq,
            fr_inc,
            el_residual,
            diss_slack_w2: w2.dissipation_slack(cfg.tau),
            w2_allowance: w2.objective_slack,
            diss_slack_fr: e2_half - e2 - fr_inc / (2.0 * cfg.tau),
            half_linf: half.linf(),
            half_mass: half.mass(),
            e1_half,
            e2_half,
            outer_gap: w2.outer_gap,
            half_full_gap: half.linf_distance(&full)?,
        };
        let blown = d.linf > sentinel || d.half_linf > sentinel;
        traj.times.push(time);
        traj.full_steps.push(full);
        traj.half_steps.push(half);
        traj.c_fields.push(c_half);
        traj.diagnostics.push(d);
        if blown {
            traj.status = RunStatus::BlowupSentinel {
                step,
                linf: d.linf.max(d.half_linf),
                sentinel,
            };
            break;
        }
    }
    Ok(traj)
}
