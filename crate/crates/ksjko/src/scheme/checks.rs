//! Trajectory-level checks of the uniform estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::weak::faces;
use super::Trajectory;
use crate::elliptic::{regularity_ratio_with, EllipticSolver};
use crate::error::Result;
use crate::metrics::{fr_distance_sq, w2_1d_sq, wfr_upper_bound};
use crate::potentials::{ThresholdReport, TrajectoryConstants};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundsCheck {
    /// `max(eta, ||rho0||_inf)`.
    pub full_bound: f64,
    /// `C1`.
    pub half_bound: f64,
    pub max_full: f64,
    pub max_half: f64,
    pub passed: bool,
}

/// Every full step below `max(eta, ||rho0||_inf)` and every half step below
/// `C1`, up to the relative tolerance `tol`.
pub fn check_uniform_bounds(traj: &Trajectory, report: &ThresholdReport, tol: f64) -> UniformBoundsCheck {
    let max_full = traj.full_steps.iter().map(|r| r.linf()).fold(0.0, f64::max);
    let max_half = traj.half_steps.iter().map(|r| r.linf()).fold(0.0, f64::max);
    let full_bound = report.full_step_bound;
    let half_bound = report.c1;
    UniformBoundsCheck {
        full_bound,
        half_bound,
        max_full,
        max_half,
        passed: max_full <= full_bound * (1.0 + tol) && max_half <= half_bound * (1.0 + tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Check {
    pub xi: f64,
    pub max_mass: f64,
    /// Largest `mass_{n+1} - (mass_{n+1/2} + tau B)/(1 + tau A)`.
    pub worst_recurrence_excess: f64,
    /// Largest relative mass change over a Wasserstein step.
    pub transport_mass_drift: f64,
    pub passed: bool,
}

pub fn check_l1_bound(traj: &Trajectory, report: &ThresholdReport, tol: f64) -> L1Check {
    let xi = &report.xi;
    let max_mass = traj.full_steps.iter().map(|r| r.mass()).fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    let mut drift: f64 = 0.0;
    for (n, d) in traj.diagnostics.iter().enumerate() {
        let before = traj.full_steps[n].mass();
        drift = drift.max((d.half_mass - before).abs() / before);
        worst = worst.max(d.mass - xi.recurrence(d.half_mass, traj.tau));
    }
    L1Check {
        xi: xi.xi,
        max_mass,
        worst_recurrence_excess: worst,
        transport_mass_drift: drift,
        passed: max_mass <= xi.xi * (1.0 + tol) && worst <= tol * xi.xi && drift <= tol,
    }
}

/// Largest `(|c| + |grad c|)_inf / ||rho||_inf` over all stored densities.
pub fn empirical_k3(traj: &Trajectory) -> Result<f64> {
    let solver = EllipticSolver::new(*traj.rho0().grid(), traj.model.elliptic)?;
    let mut k3: f64 = 0.0;
    for rho in traj.full_steps.iter().chain(&traj.half_steps) {
        if rho.linf() > 0.0 {
            k3 = k3.max(regularity_ratio_with(&solver, rho)?);
        }
    }
    Ok(k3)
}

/// `C4, C6..C9` for this trajectory with the empirical `K3` and the
/// observed range of `E1`.
pub fn trajectory_constants(traj: &Trajectory, report: &ThresholdReport) -> Result<TrajectoryConstants> {
    let k3 = empirical_k3(traj)?;
    let seen = traj
        .diagnostics
        .iter()
        .flat_map(|d| [d.e1, d.e1_half])
        .chain(std::iter::once(traj.e1_rho0));
    let (lo, hi) = seen.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    Ok(report.trajectory_constants(k3, traj.e1_rho0, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    /// `max WFR_ub^2(rho(s), rho(t)) / (t - s + tau)` over the checked pairs.
    pub max_ratio: f64,
    pub c6: f64,
    pub pairs: usize,
    /// Largest relative difference between the recorded per-step
    /// increments and a recomputation from the stored fields.
    pub increment_mismatch: f64,
    pub passed: bool,
}

/// Hölder-in-time estimate on `samples` random pairs of full steps (fixed
/// seed) plus every adjacent pair. Adjacent pairs use the chain through the
/// half step, `2 (W2^2 + FR^2)`, which bounds `WFR^2` by construction.
pub fn check_holder(traj: &Trajectory, report: &ThresholdReport, samples: usize) -> Result<HolderCheck> {
    let consts = trajectory_constants(traj, report)?;
    let tau = traj.tau;
    let n = traj.full_steps.len() - 1;
    let mut max_ratio: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    let mut pairs = 0;
    for (k, d) in traj.diagnostics.iter().enumerate() {
        let fr = fr_distance_sq(&traj.half_steps[k], &traj.full_steps[k + 1])?;
        mismatch = mismatch.max((fr - d.fr_inc).abs() / fr.max(f64::MIN_POSITIVE));
        if traj.rho0().grid().dim() == 1 {
            let w2 = w2_1d_sq(&traj.full_steps[k], &traj.half_steps[k])?;
            mismatch = mismatch.max((w2 - d.w2_inc).abs() / w2.max(f64::MIN_POSITIVE));
        }
        let chain = 2.0 * (d.w2_inc + d.fr_inc);
        max_ratio = max_ratio.max(chain / (2.0 * tau));
        pairs += 1;
    }
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..samples {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(a + 1..=n);
            let ub = wfr_upper_bound(&traj.full_steps[a], &traj.full_steps[b])?;
            max_ratio = max_ratio.max(ub * ub / ((b - a) as f64 * tau + tau));
            pairs += 1;
        }
    }
    Ok(HolderCheck {
        max_ratio,
        c6: consts.c6,
        pairs,
        increment_mismatch: mismatch,
        passed: max_ratio <= consts.c6 && mismatch <= 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSolutionsCheck {
    pub max_gap: f64,
    /// `tau C2`.
    pub bound: f64,
    pub passed: bool,
}

/// `||rho_{n+1/2} - rho_{n+1}||_inf <= tau C2`.
pub fn check_two_solutions_gap(traj: &Trajectory, report: &ThresholdReport, tol: f64) -> TwoSolutionsCheck {
    let max_gap = traj.diagnostics.iter().map(|d| d.half_full_gap).fold(0.0, f64::max);
    let bound = traj.tau * report.c2;
    TwoSolutionsCheck {
        max_gap,
        bound,
        passed: max_gap <= bound * (1.0 + tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGapCheck {
    /// `max E1(rho_{n+1}) - E1(rho_{n+1/2})` and its bound `(C3 + C4) tau`.
    pub e1_gap: f64,
    pub e1_bound: f64,
    /// `max E2(rho_{n+1/2}) - E2(rho_{n+1})` and its bound `C5 tau`.
    pub e2_gap: f64,
    pub e2_bound: f64,
    pub passed: bool,
}

pub fn check_energy_gaps(traj: &Trajectory, report: &ThresholdReport) -> Result<EnergyGapCheck> {
    let consts = trajectory_constants(traj, report)?;
    let tau = traj.tau;
    let e1_gap = traj
        .diagnostics
        .iter()
        .map(|d| d.e1 - d.e1_half)
        .fold(f64::NEG_INFINITY, f64::max);
    let e2_gap = traj
        .diagnostics
        .iter()
        .map(|d| d.e2_half - d.e2)
        .fold(f64::NEG_INFINITY, f64::max);
    let e1_bound = (report.c3 + consts.c4) * tau;
    let e2_bound = report.c5 * tau;
    Ok(EnergyGapCheck {
        e1_gap,
        e1_bound,
        e2_gap,
        e2_bound,
        passed: e1_gap <= e1_bound && e2_gap <= e2_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCheck {
    /// `sum_n tau ||grad Psi(rho_{n+1/2})||_2^2`.
    pub lhs: f64,
    pub c9: f64,
    pub passed: bool,
}

pub fn check_flux_bound(traj: &Trajectory, report: &ThresholdReport) -> Result<FluxCheck> {
    let consts = trajectory_constants(traj, report)?;
    let entropy = traj.model.entropy;
    let mut lhs = 0.0;
    for half in &traj.half_steps {
        let (faces, weight) = faces(half.grid());
        let v = half.values();
        let sq: f64 = faces
            .iter()
            .map(|&(a, b)| (entropy.psi(v[b]) - entropy.psi(v[a])).powi(2))
            .sum();
        lhs += traj.tau * sq * weight;
    }
    Ok(FluxCheck {
        lhs,
        c9: consts.c9,
        passed: lhs <= consts.c9,
    })
}
