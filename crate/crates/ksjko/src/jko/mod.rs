//! The two proximal steps of the splitting and their optimality checks.
//!
//! Wasserstein step, for the energy
//! `E1(mu) = int U(mu) - (chi/2) int c[mu] mu`:
//!
//! ```text
//! rho = argmin { E1(mu) + W2^2(g, mu) / (2 tau) : 0 <= mu <= 1/(tau chi), |mu| = |g| }
//! ```
//!
//! Fisher-Rao step, for `E2(mu) = int F(mu)`: the cellwise exact minimizer
//! of `E2(mu) + FR^2(rho, mu) / (2 tau)`, i.e. `J_tau^{-1}(rho)`.

mod entropic;
mod fisher_rao;
mod quantile;
mod residual;

pub use fisher_rao::{fr_step, fr_step_estimates, BoundCheck, FrStepCheck};
pub use residual::{w2_step_el_residual, ELResidualReport};

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticConfig, EllipticSolver};
use crate::error::{param, Error, Result};
use crate::fields::{DensityField, ScalarField};
use crate::metrics::{w2_1d_sq, KantorovichPotential1D};
use crate::potentials::{EntropySpec, ReactionSpec};

/// Physical parameters of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub chi: f64,
    /// Threshold parameter `lambda > 1` of the admissibility analysis.
    pub lambda: f64,
    pub elliptic: EllipticConfig,
    pub entropy: EntropySpec,
    pub reaction: ReactionSpec,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(param("chi", self.chi, "must be >= 0"));
        }
        if !(self.lambda > 1.0) {
            return Err(param("lambda", self.lambda, "must be > 1"));
        }
        self.elliptic.validate()
    }

    /// `E1(rho)` given the chemoattractant of `rho`.
    pub fn e1_with(&self, rho: &DensityField, c: &ScalarField) -> f64 {
        let w = rho.grid().cell_measure();
        rho.values()
            .iter()
            .zip(c.values())
            .map(|(&r, &cv)| self.entropy.u(r) - 0.5 * self.chi * cv * r)
            .sum::<f64>()
            * w
    }

    pub fn e1(&self, rho: &DensityField) -> Result<f64> {
        let c = crate::elliptic::solve(rho, &self.elliptic)?;
        Ok(self.e1_with(rho, &c))
    }

    /// `E2(rho) = int F(rho)`.
    pub fn e2(&self, rho: &DensityField) -> f64 {
        energy2(rho, &self.reaction)
    }
}

pub fn energy2(rho: &DensityField, f: &ReactionSpec) -> f64 {
    rho.values().iter().map(|&r| f.f(r)).sum::<f64>() * rho.grid().cell_measure()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum W2Backend {
    /// Exact 1d transport, Newton on the cumulative masses.
    Quantile1d,
    /// Entropic transport, Newton on the semi-dual.
    Entropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2StepConfig {
    pub backend: W2Backend,
    pub tau: f64,
    pub outer_fixed_point_iters: usize,
    /// Decreasing regularizations for the entropic backend. Empty means
    /// the default schedule for the grid.
    pub eps_schedule: Vec<f64>,
    /// Outer loop stops once `||rho_new - rho_old||_1 <= inner_tol`.
    pub inner_tol: f64,
}

impl W2StepConfig {
    pub fn new(backend: W2Backend, tau: f64) -> Self {
        Self {
            backend,
            tau,
            outer_fixed_point_iters: 3,
            eps_schedule: Vec::new(),
            inner_tol: 1e-12,
        }
    }

    /// `M_bar = 1/(tau chi)`, infinite without chemotaxis.
    pub fn density_cap(&self, chi: f64) -> f64 {
        if chi > 0.0 {
            1.0 / (self.tau * chi)
        } else {
            f64::INFINITY
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(param("tau", self.tau, "must be > 0"));
        }
        if self.outer_fixed_point_iters == 0 {
            return Err(param("outer_iters", 0.0, "must be >= 1"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(param("inner_tol", self.inner_tol, "must be > 0"));
        }
        for w in self.eps_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(param("eps_schedule", w[1], "must be strictly decreasing"));
            }
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(param("eps_schedule", 0.0, "entries must be > 0"));
        }
        Ok(())
    }

    /// Geometric schedule from `10 h^2` to `h^2` in five stages, `h` the
    /// smallest cell width. Below about `0.1 h^2` the Gibbs kernel no longer
    /// reaches the neighbouring cells and sub-cell displacements are lost.
    pub fn default_eps_schedule(h: f64) -> Vec<f64> {
        (0..5).map(|k| 10.0 * h * h * 10f64.powf(-0.25 * k as f64)).collect()
    }
}

/// Result of a Wasserstein step with the data needed by the checks.
#[derive(Debug, Clone)]
pub struct W2StepOutcome {
    pub rho: DensityField,
    /// `W2^2(g, rho)`: exact in 1d, the plan cost of the entropic
    /// solution in 2d.
    pub w2_sq: f64,
    /// `E1(g)` and `E1(rho)`.
    pub e1_g: f64,
    pub e1_rho: f64,
    /// Last outer change `||rho_new - rho_old||_1`.
    pub outer_gap: f64,
    pub outer_iterations: usize,
    /// Allowance for the entropic bias in the objective comparison.
    pub objective_slack: f64,
    pub cap: f64,
}

impl W2StepOutcome {
    pub fn objective_g(&self) -> f64 {
        self.e1_g
    }

    /// `E1(rho) + W2^2 / (2 tau)`.
    pub fn objective_rho(&self, tau: f64) -> f64 {
        self.e1_rho + self.w2_sq / (2.0 * tau)
    }

    /// `E1(g) - E1(rho) - W2^2/(2 tau)`; nonnegative for an exact minimizer.
    pub fn dissipation_slack(&self, tau: f64) -> f64 {
        self.objective_g() - self.objective_rho(tau)
    }
}

/// Inner solve for a frozen chemoattractant: minimize
/// `int U(mu) - chi int c mu + W2^2(g, mu)/(2 tau)` under the cap.
pub(crate) struct Frozen<'a> {
    pub g: &'a DensityField,
    pub c: &'a ScalarField,
    pub chi: f64,
    pub entropy: &'a EntropySpec,
    pub tau: f64,
    pub cap: f64,
}

pub(crate) enum WarmStart {
    None,
    Quantile(Vec<f64>),
    Dual(Vec<f64>),
}

/// One Wasserstein step: frozen-`c` outer loop around a convex inner solve.
pub fn w2_step(g: &DensityField, model: &ModelParams, cfg: &W2StepConfig) -> Result<W2StepOutcome> {
    let solver = EllipticSolver::new(*g.grid(), model.elliptic)?;
    w2_step_with(g, model, cfg, &solver)
}

pub fn w2_step_with(
    g: &DensityField,
    model: &ModelParams,
    cfg: &W2StepConfig,
    solver: &EllipticSolver,
) -> Result<W2StepOutcome> {
    cfg.validate()?;
    model.validate()?;
    let mass = g.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let cap = cfg.density_cap(model.chi);
    let capacity = cap * g.grid().measure();
    if mass > capacity {
        return Err(Error::CapInfeasible { mass, capacity });
    }
    if cfg.backend == W2Backend::Quantile1d && g.grid().dim() != 1 {
        return Err(Error::InvalidGrid("the quantile backend is one-dimensional".into()));
    }
    let c_g = solver.solve_c(g)?;
    let e1_g = model.e1_with(g, &c_g);
    let eps_schedule = if cfg.eps_schedule.is_empty() {
        let h = (0..g.grid().dim())
            .map(|a| g.grid().cell_width(a))
            .fold(f64::INFINITY, f64::min);
        W2StepConfig::default_eps_schedule(h)
    } else {
        cfg.eps_schedule.clone()
    };

    let mut current = g.clone();
    let mut c = c_g;
    let mut warm = WarmStart::None;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut plan_cost = 0.0;
    let mut slack = 0.0;
    for it in 0..cfg.outer_fixed_point_iters {
        let frozen = Frozen {
            g,
            c: &c,
            chi: model.chi,
            entropy: &model.entropy,
            tau: cfg.tau,
            cap,
        };
        let next = match cfg.backend {
            W2Backend::Quantile1d => {
                let (rho, state) = quantile::solve(&frozen, warm)?;
                warm = WarmStart::Quantile(state);
                rho
            }
            W2Backend::Entropic => {
                let stages: &[f64] = if it == 0 {
                    &eps_schedule
                } else {
                    &eps_schedule[eps_schedule.len() - 1..]
                };
                let sol = entropic::solve(&frozen, stages, warm)?;
                warm = WarmStart::Dual(sol.psi);
                plan_cost = sol.plan_cost;
                slack = sol.bias_bound / (2.0 * cfg.tau);
                sol.rho
            }
        };
        gap = next.l1_distance(&current)?;
        current = next;
        iterations = it + 1;
        c = solver.solve_c(&current)?;
        if gap <= cfg.inner_tol {
            break;
        }
    }
    let w2_sq = if g.grid().dim() == 1 {
        w2_1d_sq(g, &current)?
    } else {
        plan_cost
    };
    let e1_rho = model.e1_with(&current, &c);
    Ok(W2StepOutcome {
        rho: current,
        w2_sq,
        e1_g,
        e1_rho,
        outer_gap: gap,
        outer_iterations: iterations,
        objective_slack: slack,
        cap,
    })
}

/// Mass-preserving clip to `[0, cap]`: rescales the uncapped part so the
/// total matches `mass`.
pub(crate) fn finalize_density(
    grid: crate::fields::GridSpec,
    mut values: Vec<f64>,
    mass: f64,
    cap: f64,
) -> Result<DensityField> {
    let w = grid.cell_measure();
    for v in values.iter_mut() {
        *v = v.clamp(0.0, cap);
    }
    let total: f64 = values.iter().sum::<f64>() * w;
    if total > 0.0 {
        let free: f64 = values.iter().filter(|&&v| v < cap).sum::<f64>() * w;
        let capped = total - free;
        if free > 0.0 {
            let k = (mass - capped) / free;
            for v in values.iter_mut() {
                if *v < cap {
                    *v = (*v * k).min(cap);
                }
            }
        }
    }
    DensityField::new(grid, values)
}

/// The potential of the 1d step, for callers that already hold a solution.
pub fn step_potential(rho: &DensityField, g: &DensityField) -> Result<KantorovichPotential1D> {
    Ok(crate::metrics::w2_1d_full(rho, g)?.potential)
}
