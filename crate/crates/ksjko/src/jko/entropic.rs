//! Inner Wasserstein solve with entropic transport, any dimension.
//!
//! With cell masses `a_i = g_i w`, reference `r_j = 1/N` and `sigma = 2 tau`,
//! the frozen problem
//!
//! ```text
//! min_nu  sum_j G_j(nu_j) + OT_eps(a, nu) / sigma,
//! G_j(nu) = w U(nu / w) - chi c_j nu + indicator[0, cap w](nu),
//! ```
//!
//! has the concave semi-dual
//!
//! ```text
//! D(psi) = -S(psi) - sigma sum_j G_j^*(-psi_j / sigma),
//! S(psi) = eps sum_i a_i log sum_j r_j exp((psi_j - C_ij) / eps),
//! ```
//!
//! whose gradient is `nu^G - nu^S`: the cellwise proximal point (one scalar
//! equation `U'(nu/w) = chi c_j - psi_j / sigma` per cell, clipped to the
//! cap) minus the second marginal of the Gibbs plan. Plain alternating
//! scaling contracts at a rate close to `1 - eps / tau` here, so we take
//! Newton steps on `D` instead; its Hessian is banded once the Gibbs rows
//! are truncated at `exp(-50)`.

use super::{finalize_density, Frozen, WarmStart};
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::linalg::BandMatrix;

pub(super) struct EntropicSolution {
    pub rho: DensityField,
    pub psi: Vec<f64>,
    /// `<C, pi>` of the final plan.
    pub plan_cost: f64,
    /// `eps m log N`: worst-case entropic excess of the objective.
    pub bias_bound: f64,
}

struct Setup<'a> {
    frozen: &'a Frozen<'a>,
    /// Source cells with positive mass: (mass, point).
    src: Vec<(f64, [f64; 2])>,
    pts: Vec<[f64; 2]>,
    w: f64,
    sigma: f64,
    log_r: f64,
}

/// Truncated Gibbs row of one source cell.
struct Row {
    first: usize,
    idx: Vec<usize>,
    p: Vec<f64>,
}

struct Eval {
    d: f64,
    grad: Vec<f64>,
    mu_s: Vec<f64>,
    /// `dnu^G / dpsi` magnitudes (zero when clipped).
    kappa: Vec<f64>,
    rows: Vec<Row>,
}

fn sqdist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

impl<'a> Setup<'a> {
    fn new(frozen: &'a Frozen<'a>) -> Self {
        let grid = frozen.g.grid();
        let w = grid.cell_measure();
        let src = frozen
            .g
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(k, &v)| (v * w, grid.point(k)))
            .collect();
        let pts = (0..grid.len()).map(|k| grid.point(k)).collect();
        Self {
            frozen,
            src,
            pts,
            w,
            sigma: 2.0 * frozen.tau,
            log_r: -(grid.len() as f64).ln(),
        }
    }

    /// Cellwise proximal point `nu^G_j(psi_j)` and its derivative.
    fn prox(&self, j: usize, psi: f64) -> (f64, f64) {
        let f = self.frozen;
        let q = f.chi * f.c.values()[j] - psi / self.sigma;
        let s = f.entropy.du_inverse(q);
        if !(s > 0.0) {
            return (0.0, 0.0);
        }
        if s >= f.cap {
            return (f.cap * self.w, 0.0);
        }
        (s * self.w, self.w / (self.sigma * f.entropy.d2u(s)))
    }

    fn g_value(&self, j: usize, nu: f64) -> f64 {
        let f = self.frozen;
        self.w * f.entropy.u(nu / self.w) - f.chi * f.c.values()[j] * nu
    }

    fn evaluate(&self, psi: &[f64], eps: f64, want_rows: bool) -> Eval {
        let n = self.pts.len();
        let mut mu_s = vec![0.0; n];
        let mut s_val = 0.0;
        let mut rows = Vec::new();
        let mut buf: Vec<f64> = vec![0.0; n];
        for &(a, x) in &self.src {
            let mut best = f64::NEG_INFINITY;
            for j in 0..n {
                let e = psi[j] - sqdist(x, self.pts[j]);
                buf[j] = e;
                if e > best {
                    best = e;
                }
            }
            let cut = best - 50.0 * eps;
            let mut idx = Vec::new();
            let mut p = Vec::new();
            let mut z = 0.0;
            for (j, &e) in buf.iter().enumerate() {
                if e >= cut {
                    let v = ((e - best) / eps).exp();
                    idx.push(j);
                    p.push(v);
                    z += v;
                }
            }
            s_val += a * (best / eps + z.ln() + self.log_r);
            for (k, &j) in idx.iter().enumerate() {
                p[k] /= z;
                mu_s[j] += a * p[k];
            }
            if want_rows {
                rows.push(Row { first: idx[0], idx, p });
            }
        }
        s_val *= eps;
        let mut nu_g = vec![0.0; n];
        let mut kappa = vec![0.0; n];
        let mut dual = -s_val;
        for j in 0..n {
            let (nu, k) = self.prox(j, psi[j]);
            nu_g[j] = nu;
            kappa[j] = k;
            dual += psi[j] * nu + self.sigma * self.g_value(j, nu);
        }
        let grad = nu_g.iter().zip(&mu_s).map(|(a, b)| a - b).collect();
        Eval {
            d: dual,
            grad,
            mu_s,
            kappa,
            rows,
        }
    }
}

fn newton_stage(setup: &Setup, psi: &mut Vec<f64>, eps: f64, tol: f64, mass: f64) -> Result<Eval> {
    let n = psi.len();
    let max_iter = 500;
    let mut ev = setup.evaluate(psi, eps, true);
    for it in 0..max_iter {
        let res: f64 = ev.grad.iter().map(|v| v.abs()).sum();
        if res <= tol * mass {
            return Ok(ev);
        }
        let bw = ev
            .rows
            .iter()
            .map(|r| r.idx.last().unwrap() - r.first)
            .max()
            .unwrap_or(0);
        let mut a = BandMatrix::zeros(n, bw);
        for j in 0..n {
            a.add(j, j, ev.mu_s[j] / eps + ev.kappa[j]);
        }
        for (row, &(mass_i, _)) in ev.rows.iter().zip(&setup.src) {
            let f = mass_i / eps;
            for (k1, &j1) in row.idx.iter().enumerate() {
                let v1 = f * row.p[k1];
                a.add(j1, j1, -v1 * row.p[k1]);
                for (k2, &j2) in row.idx.iter().enumerate().skip(k1 + 1) {
                    a.add(j2, j1, -v1 * row.p[k2]);
                }
            }
        }
        let dmax = (0..n).map(|j| a.get(j, j)).fold(0.0_f64, f64::max);
        let mut ridge = 1e-13 * dmax.max(f64::MIN_POSITIVE);
        let step = loop {
            if let Some(s) = a.clone().solve(&ev.grad) {
                break s;
            }
            for j in 0..n {
                a.add(j, j, ridge);
            }
            ridge *= 100.0;
            if ridge > 1e10 * dmax.max(1.0) {
                return Err(Error::NotConverged {
                    what: "entropic newton (singular hessian)",
                    iterations: it,
                    residual: res / mass,
                });
            }
        };
        let slope: f64 = ev.grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = psi.iter().zip(&step).map(|(p, s)| p + t * s).collect();
            let tev = setup.evaluate(&trial, eps, true);
            let tres: f64 = tev.grad.iter().map(|v| v.abs()).sum();
            if tev.d >= ev.d + 1e-4 * t * slope || (tres < 0.5 * res && tev.d >= ev.d - 1e-12 * ev.d.abs()) {
                accepted = Some((trial, tev));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, tev)) => {
                *psi = trial;
                ev = tev;
            }
            None => {
                return Err(Error::NotConverged {
                    what: "entropic newton (line search)",
                    iterations: it,
                    residual: res / mass,
                })
            }
        }
    }
    let res: f64 = ev.grad.iter().map(|v| v.abs()).sum();
    Err(Error::NotConverged {
        what: "entropic newton",
        iterations: max_iter,
        residual: res / mass,
    })
}

pub(super) fn solve(frozen: &Frozen, stages: &[f64], warm: WarmStart) -> Result<EntropicSolution> {
    let setup = Setup::new(frozen);
    let grid = *frozen.g.grid();
    let n = grid.len();
    let mass = frozen.g.mass();
    let mut psi = match warm {
        WarmStart::Dual(p) if p.len() == n => p,
        _ => {
            let floor = 1e-12 * frozen.g.linf();
            frozen
                .g
                .values()
                .iter()
                .zip(frozen.c.values())
                .map(|(&v, &c)| -setup.sigma * (frozen.entropy.du(v.max(floor)) - frozen.chi * c))
                .collect()
        }
    };
    let last = stages.len() - 1;
    let mut ev = None;
    for (k, &eps) in stages.iter().enumerate() {
        let tol = if k == last { 1e-10 } else { 1e-7 };
        ev = Some(newton_stage(&setup, &mut psi, eps, tol, mass)?);
    }
    let ev = ev.expect("at least one stage");
    let eps = stages[last];
    let mut plan_cost = 0.0;
    for (row, &(a, x)) in ev.rows.iter().zip(&setup.src) {
        for (k, &j) in row.idx.iter().enumerate() {
            plan_cost += a * row.p[k] * sqdist(x, setup.pts[j]);
        }
    }
    let values: Vec<f64> = ev.mu_s.iter().map(|v| v / setup.w).collect();
    let rho = finalize_density(grid, values, mass, frozen.cap)?;
    Ok(EntropicSolution {
        rho,
        psi,
        plan_cost,
        bias_bound: eps * mass * (n as f64).ln(),
    })
}
