//! Inner Wasserstein solve in 1d on the cumulative masses.
//!
//! The unknowns are the edge masses `F_1 < ... < F_{N-1}` (with `F_0 = 0`,
//! `F_N = m`); cell masses are `d_j = F_{j+1} - F_j`. The frozen objective
//!
//! ```text
//! J(F) = sum_j [h U(d_j / h) - chi c_j d_j] + W(F) / (2 tau),
//! W(F) = int_0^m (Q_g(s) - Q_F(s))^2 ds,
//! ```
//!
//! is convex in `F` (transport cost is convex under mixtures and `d` is
//! linear in `F`), its Hessian is tridiagonal, and the mass constraint is
//! built in. `Q_F` is linear on each `[F_j, F_{j+1}]`, so gradient and
//! Hessian reduce to the moments `int Q_g` and `int Q_g t` per cell.
//!
//! When the cap binds, a projected gradient in `d` takes over.

use super::{finalize_density, Frozen, WarmStart};
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::linalg::solve_spd_tridiagonal;
use crate::metrics::{quantile_distance_sq, Quantile};

pub(crate) struct Problem<'a> {
    pub gq: Quantile,
    pub c: &'a [f64],
    pub chi: f64,
    pub u: &'a crate::potentials::EntropySpec,
    pub tau: f64,
    pub h: f64,
    pub n: usize,
}

/// Per-cell moments of `Q_g` on `[F_k, F_{k+1}]` with `t = (s - F_k)/d_k`.
struct Moments {
    m0: Vec<f64>,
    m1: Vec<f64>,
    /// `Q_g(F_j-)` and `Q_g(F_j+)` at interior edges `j = 1..N-1`.
    q_left: Vec<f64>,
    q_right: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn mass(&self) -> f64 {
        self.gq.mass
    }

    pub fn objective(&self, d: &[f64]) -> f64 {
        let h = self.h;
        let local: f64 = d
            .iter()
            .zip(self.c)
            .map(|(&dk, &ck)| h * self.u.u(dk / h) - self.chi * ck * dk)
            .sum();
        let vals: Vec<f64> = d.iter().map(|v| v / h).collect();
        let mq = Quantile::new(&vals, h, 1.0);
        local + quantile_distance_sq(&self.gq, &mq) / (2.0 * self.tau)
    }

    fn moments(&self, d: &[f64]) -> Moments {
        let n = self.n;
        let pieces = &self.gq.pieces;
        let mut m0 = vec![0.0; n];
        let mut m1 = vec![0.0; n];
        let mut q_left = vec![0.0; n.saturating_sub(1)];
        let mut q_right = vec![0.0; n.saturating_sub(1)];
        let mut a = 0.0;
        let mut p = 0usize;
        for k in 0..n {
            let dk = d[k];
            let b = if k + 1 == n { self.gq.mass } else { a + dk };
            if dk > 0.0 {
                while p + 1 < pieces.len() && pieces[p].s1 <= a {
                    p += 1;
                }
                let mut s = a;
                let mut q = p;
                while s < b {
                    let pc = pieces[q];
                    let end = if q + 1 < pieces.len() { pc.s1.min(b) } else { b };
                    let end = if end <= s { b } else { end };
                    let (q0, q1) = (pc.at(s), pc.at(end));
                    let (t0, t1) = ((s - a) / dk, (end - a) / dk);
                    let len = end - s;
                    m0[k] += len * (q0 + q1) / 2.0;
                    m1[k] += len * (2.0 * q0 * t0 + q0 * t1 + q1 * t0 + 2.0 * q1 * t1) / 6.0;
                    s = end;
                    if q + 1 < pieces.len() && pieces[q].s1 <= s {
                        q += 1;
                    }
                }
            }
            if k + 1 < n {
                let left = pieces.partition_point(|pc| pc.s1 < b).min(pieces.len() - 1);
                let pl = pieces[left];
                q_left[k] = pl.at(b.min(pl.s1));
                let pr = pieces[self.gq.piece_right(b)];
                q_right[k] = pr.at(b.max(pr.s0));
            }
            a = b;
        }
        Moments {
            m0,
            m1,
            q_left,
            q_right,
        }
    }

    /// Transport part of the gradient in `F` (without the `1/(2 tau)`
    /// factor), interior edges only.
    fn transport_gradient(&self, d: &[f64], mo: &Moments) -> Vec<f64> {
        let h = self.h;
        let n = self.n;
        let x = |k: usize| k as f64 * h;
        let p = |k: usize| 2.0 * h * (mo.m1[k] / d[k] - x(k) / 2.0 - h / 3.0);
        let r = |k: usize| 2.0 * h * ((mo.m0[k] - mo.m1[k]) / d[k] - x(k) / 2.0 - h / 6.0);
        (1..n).map(|j| p(j - 1) + r(j)).collect()
    }

    /// Gradient and tridiagonal Hessian in `F`.
    pub fn derivatives(&self, d: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.h;
        let n = self.n;
        let w = 1.0 / (2.0 * self.tau);
        let mo = self.moments(d);
        let tg = self.transport_gradient(d, &mo);
        let du: Vec<f64> = d.iter().map(|&v| self.u.du(v / h)).collect();
        let d2u: Vec<f64> = d.iter().map(|&v| self.u.d2u(v / h)).collect();
        let mut grad = vec![0.0; n - 1];
        let mut diag = vec![0.0; n - 1];
        let mut off = vec![0.0; n.saturating_sub(2)];
        for j in 1..n {
            let i = j - 1;
            grad[i] = du[j - 1] - du[j] - self.chi * (self.c[j - 1] - self.c[j]) + w * tg[i];
            let (dl, dr) = (d[j - 1], d[j]);
            let wl = (2.0 * h / dl) * (mo.q_left[i] - 2.0 * mo.m1[j - 1] / dl);
            let wr = (2.0 * h / dr) * (-mo.q_right[i] + 2.0 * (mo.m0[j] - mo.m1[j]) / dr);
            diag[i] = (d2u[j - 1] + d2u[j]) / h + w * (wl + wr);
            if j + 1 < n {
                let wo = -(2.0 * h / (dr * dr)) * (mo.m0[j] - 2.0 * mo.m1[j]);
                off[i] = -d2u[j] / h + w * wo;
            }
        }
        (grad, diag, off)
    }

    /// Gradient in the cell masses `d`, up to a common constant.
    fn mass_gradient(&self, d: &[f64]) -> Vec<f64> {
        let h = self.h;
        let n = self.n;
        let w = 1.0 / (2.0 * self.tau);
        let mo = self.moments(d);
        let tg = self.transport_gradient(d, &mo);
        let mut out = vec![0.0; n];
        let mut suffix = 0.0;
        for k in (0..n).rev() {
            out[k] = self.u.du(d[k] / h) - self.chi * self.c[k] + w * suffix;
            if k >= 1 {
                suffix += tg[k - 1];
            }
        }
        out
    }
}

fn to_masses(f: &[f64], mass: f64) -> Vec<f64> {
    let n = f.len() + 1;
    (0..n)
        .map(|k| {
            let a = if k == 0 { 0.0 } else { f[k - 1] };
            let b = if k + 1 == n { mass } else { f[k] };
            b - a
        })
        .collect()
}

fn to_edges(d: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    d[..d.len() - 1]
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

pub(crate) fn initial_masses(g: &DensityField, warm: WarmStart) -> Vec<f64> {
    let h = g.grid().cell_width(0);
    let n = g.grid().n(0);
    let mass = g.mass();
    let mut d: Vec<f64> = match warm {
        WarmStart::Quantile(d) if d.len() == n => d,
        _ => g.values().iter().map(|v| v * h).collect(),
    };
    if d.iter().any(|&v| !(v > 0.0)) {
        let theta = 1e-9;
        for v in d.iter_mut() {
            *v = (1.0 - theta) * v.max(0.0) + theta * mass / n as f64;
        }
    }
    let total: f64 = d.iter().sum();
    d.iter_mut().for_each(|v| *v *= mass / total);
    d
}

pub(super) fn solve(p: &Frozen, warm: WarmStart) -> Result<(DensityField, Vec<f64>)> {
    let grid = *p.g.grid();
    let h = grid.cell_width(0);
    let n = grid.n(0);
    let prob = Problem {
        gq: Quantile::new(p.g.values(), h, 1.0),
        c: p.c.values(),
        chi: p.chi,
        u: p.entropy,
        tau: p.tau,
        h,
        n,
    };
    let mass = prob.mass();
    let mut d = initial_masses(p.g, warm);
    if n > 1 {
        d = newton(&prob, d)?;
    }
    if d.iter().any(|&v| v / h > p.cap) || d.iter().any(|&v| v < 0.0) {
        d = projected_gradient(&prob, d, p.cap)?;
    }
    let values: Vec<f64> = d.iter().map(|v| v / h).collect();
    let rho = finalize_density(grid, values, mass, p.cap)?;
    Ok((rho, d))
}

/// Damped Newton in `F` keeping every cell mass positive.
pub(crate) fn newton(prob: &Problem, d0: Vec<f64>) -> Result<Vec<f64>> {
    let mass = prob.mass();
    let mut f = to_edges(&d0);
    let mut d = d0;
    let mut obj = prob.objective(&d);
    for _ in 0..300 {
        let (grad, mut diag, off) = prob.derivatives(&d);
        let gmax = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gmax <= 1e-13 {
            return Ok(d);
        }
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let mut step = solve_spd_tridiagonal(&diag, &off, &rhs);
        let mut ridge = 1e-14 * diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        while step.is_none() && ridge.is_finite() && ridge > 0.0 {
            diag.iter_mut().for_each(|v| *v += ridge);
            step = solve_spd_tridiagonal(&diag, &off, &rhs);
            ridge *= 100.0;
        }
        let step = step.ok_or(Error::NotConverged {
            what: "quantile newton (singular hessian)",
            iterations: 0,
            residual: gmax,
        })?;
        let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        let ds = to_masses(&step, 0.0);
        // fraction to the boundary d > 0
        let mut t = 1.0_f64;
        for (dk, sk) in d.iter().zip(&ds) {
            if *sk < 0.0 {
                t = t.min(0.95 * dk / -sk);
            }
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial_f: Vec<f64> = f.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let trial_d = to_masses(&trial_f, mass);
            if trial_d.iter().all(|&v| v > 0.0) {
                let val = prob.objective(&trial_d);
                if val <= obj - 1e-4 * t * decrement || (val <= obj && decrement <= 1e-20) {
                    f = trial_f;
                    d = trial_d;
                    obj = val;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // Either the objective no longer resolves the step (roundoff
            // floor) or vacuum is forming without a barrier; the caller
            // falls back to the projected gradient in the second case.
            return Ok(d);
        }
        if decrement <= 1e-24 * (1.0 + obj.abs()) {
            return Ok(d);
        }
    }
    Ok(d)
}

/// Projection onto `{lo <= d <= hi, sum d = mass}` by bisection on the
/// shift.
fn project(y: &[f64], lo: f64, hi: f64, mass: f64) -> Vec<f64> {
    let total = |nu: f64| y.iter().map(|v| (v - nu).clamp(lo, hi)).sum::<f64>();
    let mut a = y.iter().cloned().fold(f64::INFINITY, f64::min) - hi;
    let mut b = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lo;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if total(mid) > mass {
            a = mid;
        } else {
            b = mid;
        }
    }
    let nu = 0.5 * (a + b);
    y.iter().map(|v| (v - nu).clamp(lo, hi)).collect()
}

pub(crate) fn projected_gradient(prob: &Problem, d0: Vec<f64>, cap: f64) -> Result<Vec<f64>> {
    let h = prob.h;
    let n = prob.n;
    let mass = prob.mass();
    let hi = if cap.is_finite() { cap * h } else { f64::INFINITY };
    let lo = if prob.u.du(0.0).is_finite() {
        0.0
    } else {
        1e-14 * mass / n as f64
    };
    let mut d = project(&d0, lo, hi, mass);
    let mut obj = prob.objective(&d);
    let mut s = 1e-3 * h;
    let max_iter = 50_000;
    for it in 0..max_iter {
        let g = prob.mass_gradient(&d);
        let mut moved = false;
        for _ in 0..60 {
            let y: Vec<f64> = d.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            let trial = project(&y, lo, hi, mass);
            let lin: f64 = trial.iter().zip(&d).zip(&g).map(|((t, a), b)| (t - a) * b).sum();
            let sq: f64 = trial.iter().zip(&d).map(|(t, a)| (t - a).powi(2)).sum();
            let val = prob.objective(&trial);
            if val <= obj + lin + sq / (2.0 * s) + 1e-15 * obj.abs() {
                let change: f64 = trial.iter().zip(&d).map(|(t, a)| (t - a).abs()).sum();
                d = trial;
                obj = val;
                moved = true;
                s *= 1.5;
                if change <= 1e-13 * mass {
                    return Ok(d);
                }
                break;
            }
            s *= 0.5;
        }
        if !moved {
            return Ok(d);
        }
        if it + 1 == max_iter {
            return Err(Error::NotConverged {
                what: "capped projected gradient",
                iterations: max_iter,
                residual: s,
            });
        }
    }
    Ok(d)
}
