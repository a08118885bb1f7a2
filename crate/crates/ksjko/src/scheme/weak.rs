//! Discrete weak form of the limit equation, tested against a smooth
//! function `phi(x)` (depending on the first coordinate only):
//!
//! ```text
//! int phi (rho_{n2} - rho_{n1})
//!   + sum_k tau [ int grad Psi(rho~) . grad phi - chi int rho~ grad c[rho~] . grad phi
//!               + int sqrt(rho)(sqrt(rho) + sqrt(rho~))/2 F'(rho) phi ]
//! ```
//!
//! with `rho~ = rho_{k+1/2}`, `rho = rho_{k+1}`. The reaction part is exact
//! for the Fisher-Rao step, so what remains is the transport error.

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::elliptic::EllipticSolver;
use crate::error::{param, Result};
use crate::fields::{DensityField, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `phi = 1`.
    One,
    /// `phi = x (L - x)`.
    Parabola,
    /// `phi = cos(pi x / L)`.
    Cosine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::One, TestFunction::Parabola, TestFunction::Cosine];

    pub fn value(&self, x: f64, l: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Parabola => x * (l - x),
            TestFunction::Cosine => (std::f64::consts::PI * x / l).cos(),
        }
    }

    pub fn derivative(&self, x: f64, l: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Parabola => l - 2.0 * x,
            TestFunction::Cosine => {
                let k = std::f64::consts::PI / l;
                -k * (k * x).sin()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Parabola => "parabola",
            TestFunction::Cosine => "cosine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub phi: TestFunction,
    pub n1: usize,
    pub n2: usize,
    /// `int phi (rho_{n2} - rho_{n1})`.
    pub increment: f64,
    pub diffusion: f64,
    pub chemotaxis: f64,
    pub reaction: f64,
    /// Absolute value of the signed sum.
    pub residual: f64,
}

/// Interior faces along the first axis as cell pairs `(left, right)`, plus
/// the weight `cell_measure / h^2` of a face-difference product.
pub(crate) fn faces(grid: &GridSpec) -> (Vec<(usize, usize)>, f64) {
    let nx = grid.n(0);
    let ny = if grid.dim() == 2 { grid.n(1) } else { 1 };
    let mut out = Vec::with_capacity(ny * nx.saturating_sub(1));
    for j in 0..ny {
        for i in 0..nx.saturating_sub(1) {
            let k = j * nx + i;
            out.push((k, k + 1));
        }
    }
    let h = grid.cell_width(0);
    (out, grid.cell_measure() / (h * h))
}

/// `int grad Psi(rho) . grad phi` with face differences; no-flux walls.
pub(crate) fn diffusion_term(rho: &DensityField, psi: impl Fn(f64) -> f64, phi: &[f64]) -> f64 {
    let (faces, weight) = faces(rho.grid());
    let v = rho.values();
    faces
        .iter()
        .map(|&(a, b)| (psi(v[b]) - psi(v[a])) * (phi[b] - phi[a]))
        .sum::<f64>()
        * weight
}

fn phi_samples(grid: &GridSpec, phi: TestFunction) -> (Vec<f64>, Vec<f64>) {
    let l = grid.length(0);
    (0..grid.len())
        .map(|k| {
            let x = grid.point(k)[0];
            (phi.value(x, l), phi.derivative(x, l))
        })
        .unzip()
}

/// All terms of the discrete weak form between steps `n1 = round(t1/tau)`
/// and `n2 = round(t2/tau)`.
pub fn weak_residual_terms(traj: &Trajectory, phi: TestFunction, t1: f64, t2: f64) -> Result<WeakResidual> {
    let last = traj.full_steps.len() - 1;
    let n1 = (t1 / traj.tau).round();
    let n2 = (t2 / traj.tau).round();
    if !(n1 >= 0.0 && n2 > n1) {
        return Err(param("t2", t2, "needs 0 <= t1 < t2"));
    }
    let (n1, n2) = (n1 as usize, (n2 as usize).min(last));
    if n1 >= n2 {
        return Err(param("t1", t1, "no step inside the window"));
    }
    let grid = *traj.rho0().grid();
    let w = grid.cell_measure();
    let (phi_v, dphi) = phi_samples(&grid, phi);
    let solver = EllipticSolver::new(grid, traj.model.elliptic)?;
    let model = &traj.model;
    let integrate = |v: &[f64], f: &dyn Fn(usize, f64) -> f64| -> f64 {
        v.iter().enumerate().map(|(k, &x)| f(k, x)).sum::<f64>() * w
    };
    let increment = integrate(traj.full_steps[n2].values(), &|k, x| x * phi_v[k])
        - integrate(traj.full_steps[n1].values(), &|k, x| x * phi_v[k]);
    let (mut diffusion, mut chemotaxis, mut reaction) = (0.0, 0.0, 0.0);
    for k in n1..n2 {
        let half = &traj.half_steps[k];
        let full = &traj.full_steps[k + 1];
        diffusion += traj.tau * diffusion_term(half, |s| model.entropy.psi(s), &phi_v);
        if model.chi > 0.0 {
            let chemo = solver.solve(half)?;
            let gx = chemo.grad[0].values();
            chemotaxis += traj.tau * model.chi * integrate(half.values(), &|j, r| r * gx[j] * dphi[j]);
        }
        let hv = half.values();
        reaction += traj.tau
            * integrate(full.values(), &|j, r| {
                let mixed = r.sqrt() * (r.sqrt() + hv[j].sqrt()) / 2.0;
                mixed * model.reaction.df(r) * phi_v[j]
            });
    }
    Ok(WeakResidual {
        phi,
        n1,
        n2,
        increment,
        diffusion,
        chemotaxis,
        reaction,
        residual: (increment + diffusion - chemotaxis + reaction).abs(),
    })
}

pub fn weak_residual(traj: &Trajectory, phi: TestFunction, t1: f64, t2: f64) -> Result<f64> {
    Ok(weak_residual_terms(traj, phi, t1, t2)?.residual)
}
