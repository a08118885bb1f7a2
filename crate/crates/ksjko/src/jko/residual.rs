//! Euler-Lagrange residual of the Wasserstein step in 1d:
//! `U'(rho) - chi c[rho] + phi / (2 tau) + p = l` with `p >= 0` and
//! `(M_bar - rho) p = 0`, `phi` the potential from `rho` to `g` for the
//! cost `|x - y|^2`.

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::metrics::w2_1d_full;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ELResidualReport {
    pub l_estimate: f64,
    /// `max |h - l|` over the inactive set.
    pub max_residual: f64,
    pub cap_active_fraction: f64,
    /// `max p (M_bar - rho) / M_bar`.
    pub complementarity_defect: f64,
}

pub fn w2_step_el_residual(
    rho: &DensityField,
    g: &DensityField,
    model: &ModelParams,
    tau: f64,
) -> Result<ELResidualReport> {
    if rho.grid().dim() != 1 {
        return Err(Error::RequiresQuantileBackend("the Euler-Lagrange residual"));
    }
    let cap = if model.chi > 0.0 {
        1.0 / (tau * model.chi)
    } else {
        f64::INFINITY
    };
    let c = crate::elliptic::solve(rho, &model.elliptic)?;
    let sol = w2_1d_full(rho, g)?;
    let phi = sol.potential.values.values();
    let threshold = 1e-10 * rho.linf();
    let n = rho.values().len();
    let h: Vec<f64> = (0..n)
        .map(|k| {
            let r = rho.values()[k];
            model.entropy.du(r) - model.chi * c.values()[k] + phi[k] / (2.0 * tau)
        })
        .collect();
    let support = |k: usize| rho.values()[k] > threshold;
    let active = |k: usize| rho.values()[k] >= 0.99 * cap;

    let mut inactive: Vec<(f64, f64)> = (0..n)
        .filter(|&k| support(k) && !active(k))
        .map(|k| (h[k], rho.values()[k]))
        .collect();
    inactive.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = inactive.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut l = inactive.last().map_or(0.0, |p| p.0);
    for &(hv, w) in &inactive {
        acc += w;
        if acc >= 0.5 * total {
            l = hv;
            break;
        }
    }
    let max_residual = inactive.iter().map(|p| (p.0 - l).abs()).fold(0.0, f64::max);
    let n_active = (0..n).filter(|&k| active(k)).count();
    let complementarity_defect = if cap.is_finite() {
        (0..n)
            .filter(|&k| active(k))
            .map(|k| (l - h[k]).max(0.0) * (cap - rho.values()[k]) / cap)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(ELResidualReport {
        l_estimate: l,
        max_residual,
        cap_active_fraction: n_active as f64 / n as f64,
        complementarity_defect,
    })
}
