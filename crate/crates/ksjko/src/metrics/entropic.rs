//! Log-domain Sinkhorn on the squared-distance cost between cell centres.

use crate::error::{Error, Result};
use crate::fields::DensityField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Stop once `||pi 1 - a||_1 <= tol * mass`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornReport {
    /// Transport part `<C, pi>` of the entropic optimum.
    pub cost: f64,
    pub iterations: usize,
    pub marginal_error: f64,
}

fn lse(it: impl Iterator<Item = f64>, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(it);
    let m = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + buf.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

struct Support {
    pts: Vec<[f64; 2]>,
    logw: Vec<f64>,
}

fn support(rho: &DensityField) -> Support {
    let g = rho.grid();
    let w = g.cell_measure();
    let mut pts = Vec::new();
    let mut logw = Vec::new();
    for (k, &v) in rho.values().iter().enumerate() {
        if v > 0.0 {
            pts.push(g.point(k));
            logw.push((v * w).ln());
        }
    }
    Support { pts, logw }
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Runs Sinkhorn at `eps`, annealing from the squared diameter of the
/// domain down by halving, each stage warm started from the last.
pub fn sinkhorn(rho0: &DensityField, rho1: &DensityField, eps: f64, opts: SinkhornOptions) -> Result<SinkhornReport> {
    if rho0.grid() != rho1.grid() {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(crate::error::param("eps", eps, "must be > 0"));
    }
    let m0 = rho0.mass();
    let m1 = rho1.mass();
    if !(m0 > 0.0) || !(m1 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if (m0 - m1).abs() > 1e-10 * m0 {
        return Err(Error::MassMismatch(m0, m1));
    }
    let a = support(rho0);
    let mut b = support(rho1);
    let shift = (m0 / m1).ln();
    b.logw.iter_mut().for_each(|v| *v += shift);
    let (na, nb) = (a.pts.len(), b.pts.len());
    let cost: Vec<f64> = (0..na)
        .flat_map(|i| {
            let (ap, bp) = (&a.pts, &b.pts);
            (0..nb).map(move |j| sq(ap[i], bp[j]))
        })
        .collect();

    let diam: f64 = rho0.grid().lengths().iter().map(|l| l * l).sum();
    let mut stages = vec![eps];
    while *stages.last().unwrap() < diam {
        let next = stages.last().unwrap() * 2.0;
        stages.push(next);
    }
    stages.reverse();

    let mut f = vec![0.0; na];
    let mut g = vec![0.0; nb];
    let mut buf = Vec::with_capacity(na.max(nb));
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    let last = stages.len() - 1;
    for (stage, &e) in stages.iter().enumerate() {
        let tol = if stage == last { opts.tol } else { opts.tol.max(1e-4) };
        loop {
            // pi_ij = exp((f_i + g_j - C_ij)/e)
            for j in 0..nb {
                let l = lse((0..na).map(|i| (f[i] - cost[i * nb + j]) / e), &mut buf);
                g[j] = e * (b.logw[j] - l);
            }
            for i in 0..na {
                let row = &cost[i * nb..(i + 1) * nb];
                let l = lse((0..nb).map(|j| (g[j] - row[j]) / e), &mut buf);
                f[i] = e * (a.logw[i] - l);
            }
            iterations += 1;
            // rows are exact now; measure the column marginal
            err = 0.0;
            for j in 0..nb {
                let s: f64 = (0..na).map(|i| ((f[i] + g[j] - cost[i * nb + j]) / e).exp()).sum();
                err += (s - b.logw[j].exp()).abs();
            }
            if err <= tol * m0 {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NotConverged {
                    what: "sinkhorn",
                    iterations,
                    residual: err / m0,
                });
            }
        }
    }
    let e = eps;
    let mut total = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = cost[i * nb + j];
            total += c * ((f[i] + g[j] - c) / e).exp();
        }
    }
    Ok(SinkhornReport {
        cost: total,
        iterations,
        marginal_error: err / m0,
    })
}

/// Square root of the entropic transport cost at regularization `eps`.
pub fn w2_entropic(rho0: &DensityField, rho1: &DensityField, eps: f64) -> Result<f64> {
    Ok(sinkhorn(rho0, rho1, eps, SinkhornOptions::default())?
        .cost
        .max(0.0)
        .sqrt())
}
