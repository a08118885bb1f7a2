//! Independent reference solutions for the integration tests. Nothing here
//! calls into the crate's solvers; reaction terms are written out again.
#![allow(dead_code)]

use std::f64::consts::PI;

use ksjko::DensityField;

/// A reference value together with an estimate of its own error.
#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    pub values: T,
    /// Absolute error bound (or estimate, see `method`). Always `> 0`.
    pub error_bound: f64,
    pub method: &'static str,
}

/// `alpha rho0 e^{alpha t} / (alpha + beta rho0 (e^{alpha t} - 1))`, the
/// solution of `rho' = alpha rho - beta rho^2`. The bound is rounding only.
pub fn logistic_exact(rho0: f64, alpha: f64, beta: f64, t: f64) -> OracleResult<f64> {
    assert!(alpha > 0.0 && beta > 0.0 && rho0 >= 0.0);
    let e = (alpha * t).exp();
    let v = alpha * rho0 * e / (alpha + beta * rho0 * (e - 1.0));
    OracleResult {
        values: v,
        error_bound: 8.0 * f64::EPSILON * v.max(f64::MIN_POSITIVE),
        method: "closed form",
    }
}

/// `-rho F'(rho)` for `F(s) = beta s^r / r - alpha s`.
fn reaction_rate(rho: f64, alpha: f64, beta: f64, r: f64) -> f64 {
    alpha * rho - beta * rho.max(0.0).powf(r)
}

fn rk4(rho0: f64, alpha: f64, beta: f64, r: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let f = |y: f64| reaction_rate(y, alpha, beta, r);
    let mut y = rho0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Classic RK4 for `rho' = alpha rho - beta rho^r`; the error estimate is
/// the Richardson difference against `2 steps`, `|y_h - y_{h/2}| 16/15`.
pub fn rk4_reaction(rho0: f64, alpha: f64, beta: f64, r: f64, t: f64, steps: usize) -> OracleResult<f64> {
    assert!(steps >= 10);
    let coarse = rk4(rho0, alpha, beta, r, t, steps);
    let fine = rk4(rho0, alpha, beta, r, t, 2 * steps);
    OracleResult {
        values: fine,
        error_bound: ((coarse - fine).abs() * 16.0 / 15.0).max(4.0 * f64::EPSILON * fine.abs().max(1.0)),
        method: "rk4, step halving",
    }
}

/// Orthonormal-free DCT-II pair on `n` cell centres, as dense matrices.
struct CosineBasis {
    n: usize,
    /// `cos(k pi (j + 1/2) / n)`, row `k`.
    table: Vec<f64>,
}

impl CosineBasis {
    fn new(n: usize) -> Self {
        let mut table = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                table[k * n + j] = (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
        }
        Self { n, table }
    }

    /// Coefficients `a_k` with `v_j = sum_k a_k cos(k pi (j + 1/2)/n)`.
    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let row = &self.table[k * n..(k + 1) * n];
                let s: f64 = row.iter().zip(v).map(|(c, x)| c * x).sum();
                s * if k == 0 { 1.0 } else { 2.0 } / n as f64
            })
            .collect()
    }

    fn inverse(&self, a: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for k in 0..n {
            let row = &self.table[k * n..(k + 1) * n];
            for (o, c) in out.iter_mut().zip(row) {
                *o += a[k] * c;
            }
        }
        out
    }
}

fn cn_run(rho0: &[f64], length: f64, alpha: f64, beta: f64, r: f64, dt: f64, t: f64) -> Vec<f64> {
    let n = rho0.len();
    let basis = CosineBasis::new(n);
    let lam: Vec<f64> = (0..n).map(|k| (PI * k as f64 / length).powi(2)).collect();
    let steps = (t / dt).round() as usize;
    let react = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| reaction_rate(x, alpha, beta, r)).collect() };
    let mut a = basis.forward(rho0);
    let mut prev_reaction: Option<Vec<f64>> = None;
    let mut values = rho0.to_vec();
    for _ in 0..steps {
        let rc = basis.forward(&react(&values));
        // Crank-Nicolson for the Laplacian, Adams-Bashforth 2 for the
        // reaction (forward Euler on the first step).
        let explicit: Vec<f64> = match &prev_reaction {
            Some(p) => rc.iter().zip(p).map(|(c, q)| 1.5 * c - 0.5 * q).collect(),
            None => rc.clone(),
        };
        for k in 0..n {
            a[k] = ((1.0 - 0.5 * dt * lam[k]) * a[k] + dt * explicit[k]) / (1.0 + 0.5 * dt * lam[k]);
        }
        prev_reaction = Some(rc);
        values = basis.inverse(&a);
    }
    values
}

/// Cell values of `rho_t = rho_xx + alpha rho - beta rho^r` with no-flux
/// walls at time `t`, from spectral Crank-Nicolson in the cosine basis with
/// explicit reaction. The error estimate compares against `dt/2`.
pub fn crank_nicolson_rd(
    rho0: &[f64],
    length: f64,
    alpha: f64,
    beta: f64,
    r: f64,
    dt: f64,
    t: f64,
) -> OracleResult<Vec<f64>> {
    let coarse = cn_run(rho0, length, alpha, beta, r, dt, t);
    let fine = cn_run(rho0, length, alpha, beta, r, 0.5 * dt, t);
    let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    OracleResult {
        values: fine,
        error_bound: (diff * 4.0 / 3.0).max(f64::EPSILON),
        method: "spectral crank-nicolson / ab2, step halving",
    }
}

/// Averages a fine cell field onto `coarse` cells.
pub fn restrict(fine: &[f64], coarse: usize) -> Vec<f64> {
    let k = fine.len() / coarse;
    assert_eq!(k * coarse, fine.len());
    fine.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect()
}

fn eta(m: f64, alpha: f64, beta: f64, r: f64) -> f64 {
    ((alpha + m) / beta).powf(1.0 / (r - 1.0))
}

/// `sup_M min(M / eta_M, M / rho0_linf)` by a 10^4-point log grid on
/// `[1e-8, 1e12] s`, `s = max(1, alpha, beta, rho0_linf)`, followed by a
/// second 10^4-point grid between the neighbours of the best node.
/// Infinity is reported when the log-log slope over the last decade of the
/// grid stays above `1e-6` (growth like a positive power of `M`).
pub fn chi_star_brute(alpha: f64, beta: f64, r: f64, rho0_linf: f64) -> OracleResult<f64> {
    let obj = |m: f64| (m / eta(m, alpha, beta, r)).min(m / rho0_linf);
    let s = 1f64.max(alpha).max(beta).max(rho0_linf);
    let (lo, hi) = ((1e-8 * s).ln(), (1e12 * s).ln());
    let n = 10_000;
    let node = |k: usize| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp();
    let (mut kb, mut vb) = (0, f64::NEG_INFINITY);
    for k in 0..n {
        let v = obj(node(k));
        if v > vb {
            kb = k;
            vb = v;
        }
    }
    if kb == n - 1 {
        let top = node(n - 1);
        let slope = (obj(top) / obj(top / 10.0)).log10();
        if slope > 1e-6 {
            return OracleResult {
                values: f64::INFINITY,
                error_bound: f64::INFINITY,
                method: "grid search, unbounded growth",
            };
        }
        return OracleResult {
            values: vb,
            error_bound: (vb - obj(top / 10.0)).abs().max(f64::EPSILON * vb),
            method: "grid search, supremum at the top of the grid",
        };
    }
    let a = node(kb.saturating_sub(1)).ln();
    let b = node(kb + 1).ln();
    let spacing = (b - a) / (n - 1) as f64;
    let best = (0..n).map(|k| obj((a + spacing * k as f64).exp())).fold(vb, f64::max);
    OracleResult {
        values: best,
        // the objective is Lipschitz in log M with constant at most r/(r-1)
        error_bound: best * spacing * r / (r - 1.0),
        method: "two-level log grid search",
    }
}

/// `J_tau(s) = s (1 + tau F'(s)/2)^2` inverted by plain bisection on
/// `[0, rho / (1 - tau alpha / 2)^2]`.
pub fn j_inverse_bisect(rho: f64, tau: f64, alpha: f64, beta: f64, r: f64) -> OracleResult<f64> {
    let j = |s: f64| {
        let a = 1.0 + 0.5 * tau * (beta * s.powf(r - 1.0) - alpha);
        s * a * a
    };
    let floor = 1.0 - 0.5 * tau * alpha;
    let (mut lo, mut hi) = (0.0, rho / (floor * floor));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    OracleResult {
        values: 0.5 * (lo + hi),
        error_bound: (hi - lo).max(f64::EPSILON * hi),
        method: "bisection",
    }
}

/// c-transform by golden-section search over the whole domain; the inner
/// function `x -> |x - y|^2 - phi(x)` is convex for a c-concave `phi`.
pub fn c_transform_golden(phi: &dyn Fn(f64) -> f64, y: f64, len: f64) -> f64 {
    let g = |x: f64| (x - y).powi(2) - phi(x);
    let best = g(0.0).min(g(len));
    let (mut lo, mut hi) = (0.0, len);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if g(a) < g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.min(g(0.5 * (lo + hi)))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
}

/// `int rho f` for a piecewise-constant 1d density, adaptive Simpson per
/// cell started from `sub` panels.
pub fn integrate_simpson(rho: &DensityField, f: &dyn Fn(f64) -> f64, sub: usize) -> f64 {
    let h = rho.grid().cell_width(0);
    let mut total = 0.0;
    for (i, &v) in rho.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let d = h / sub as f64;
        let mut s = 0.0;
        for k in 0..sub {
            let a = i as f64 * h + k as f64 * d;
            let b = a + d;
            let (fa, fb) = (f(a), f(b));
            let (m, fm, whole) = simpson(f, a, fa, b, fb);
            s += adaptive(f, a, fa, b, fb, whole, m, fm, 1e-14 / sub as f64, 30);
        }
        total += v * s;
    }
    total
}
