//! Fisher-Rao step: cellwise `rho_hat = J_tau^{-1}(rho)` and the two
//! one-step estimates it satisfies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::potentials::{eta, xi, ReactionSpec};

/// Exact minimizer of `E2(mu) + FR^2(rho, mu)/(2 tau)` for the cellwise
/// reaction energy. Zero cells stay zero.
pub fn fr_step(rho: &DensityField, f: &ReactionSpec, tau: f64) -> Result<DensityField> {
    if !(tau > 0.0) {
        return Err(crate::error::param("tau", tau, "must be > 0"));
    }
    let limit = f.tau_limit();
    if tau >= limit {
        return Err(Error::StepTooLarge { tau, limit });
    }
    let values = rho
        .values()
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { f.j_inv_unchecked(v, tau) })
        .collect();
    DensityField::new(*rho.grid(), values)
}

/// `value <= bound` with the margin `bound - value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

impl BoundCheck {
    pub fn new(value: f64, bound: f64, tol: f64) -> Self {
        Self {
            value,
            bound,
            margin: bound - value,
            passed: value <= bound + tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrStepCheck {
    /// `true` when `||rho_hat||_inf > eta_M`, i.e. the contraction branch.
    pub above_eta: bool,
    pub eta: f64,
    pub linf: BoundCheck,
    /// Mass recurrence with the `eps` chosen for `xi`.
    pub l1: BoundCheck,
}

impl FrStepCheck {
    pub fn passed(&self) -> bool {
        self.linf.passed && self.l1.passed
    }
}

/// Checks the `L^inf` branch estimate for the given `M` and the one-step
/// mass recurrence.
pub fn fr_step_estimates(
    rho: &DensityField,
    rho_hat: &DensityField,
    f: &ReactionSpec,
    tau: f64,
    m: f64,
) -> Result<FrStepCheck> {
    if rho.grid() != rho_hat.grid() {
        return Err(Error::GridMismatch);
    }
    if !(m > 0.0) {
        return Err(crate::error::param("M", m, "must be > 0"));
    }
    let eta_m = eta(m, f);
    let hat = rho_hat.linf();
    let above = hat > eta_m;
    let bound = if above { rho.linf() / (1.0 + tau * m) } else { eta_m };
    let linf = BoundCheck::new(hat, bound, 1e-10);
    let rep = xi(rho.mass(), f, rho.grid().measure());
    let l1 = BoundCheck::new(rho_hat.mass(), rep.recurrence(rho.mass(), tau), 1e-10);
    Ok(FrStepCheck {
        above_eta: above,
        eta: eta_m,
        linf,
        l1,
    })
}
