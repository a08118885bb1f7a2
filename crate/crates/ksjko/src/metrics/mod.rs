//! Distances between densities: exact 1d `W2`, entropic `W2`, the
//! Fisher-Rao closed form and upper bounds for `WFR`.

mod entropic;
mod w2_1d;

pub use entropic::{sinkhorn, w2_entropic, SinkhornOptions, SinkhornReport};
pub(crate) use w2_1d::{quantile_distance_sq, Quantile};
pub use w2_1d::{w2_1d, w2_1d_full, w2_1d_sq, KantorovichPotential1D, TransportPlan1D, W2Solution1D};

use crate::error::{Error, Result};
use crate::fields::DensityField;

/// `FR^2 = 4 int |sqrt(rho0) - sqrt(rho1)|^2`.
pub fn fr_distance_sq(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    if rho0.grid() != rho1.grid() {
        return Err(Error::GridMismatch);
    }
    let w = rho0.grid().cell_measure();
    Ok(4.0
        * w
        * rho0
            .values()
            .iter()
            .zip(rho1.values())
            .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
            .sum::<f64>())
}

pub fn fr_distance(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    Ok(fr_distance_sq(rho0, rho1)?.sqrt())
}

/// The individual chains behind [`wfr_upper_bound`]; entries that do not
/// apply are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WfrChains {
    pub fr: f64,
    /// Through `rho1` rescaled to the mass of `rho0`.
    pub via_target: Option<f64>,
    /// Through `rho0` rescaled to the mass of `rho1`.
    pub via_source: Option<f64>,
    pub w2: Option<f64>,
}

impl WfrChains {
    pub fn min(&self) -> f64 {
        [self.via_target, self.via_source, self.w2]
            .into_iter()
            .flatten()
            .fold(self.fr, f64::min)
    }
}

/// Evaluates every applicable chain. Transport chains need a 1d grid and
/// positive masses.
pub fn wfr_chains(rho0: &DensityField, rho1: &DensityField) -> Result<WfrChains> {
    let fr = fr_distance(rho0, rho1)?;
    let mut out = WfrChains {
        fr,
        via_target: None,
        via_source: None,
        w2: None,
    };
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if rho0.grid().dim() != 1 || !(m0 > 0.0) || !(m1 > 0.0) {
        return Ok(out);
    }
    let sigma = rho1.scaled(m0 / m1)?;
    out.via_target = Some(wfr_upper_bound_via(rho0, &sigma, rho1)?);
    let sigma0 = rho0.scaled(m1 / m0)?;
    out.via_source = Some(wfr_upper_bound_via(rho1, &sigma0, rho0)?);
    if (m0 - m1).abs() <= 1e-10 * m0 {
        out.w2 = Some(w2_1d(rho0, rho1)?);
    }
    Ok(out)
}

/// `sqrt(2 (W2^2(rho0, sigma) + FR^2(sigma, rho1)))` for an intermediate
/// `sigma` with the mass of `rho0` (1d).
pub fn wfr_upper_bound_via(rho0: &DensityField, sigma: &DensityField, rho1: &DensityField) -> Result<f64> {
    Ok((2.0 * (w2_1d_sq(rho0, sigma)? + fr_distance_sq(sigma, rho1)?)).sqrt())
}

/// Smallest of the available upper bounds for `WFR(rho0, rho1)`.
pub fn wfr_upper_bound(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    Ok(wfr_chains(rho0, rho1)?.min())
}
