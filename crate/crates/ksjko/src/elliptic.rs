//! Chemoattractant solve: `-Lap c + Lambda c = rho` with no-flux walls, or
//! `-Lap c = rho` with `c = 0` on the boundary.
//!
//! The cell-centred five-point (three-point in 1d) Laplacian is diagonal in
//! the cosine basis `cos(pi k (j + 1/2) / N)` for reflecting ghost cells and
//! in the sine basis `sin(pi k (j + 1/2) / N)`, `k = 1..N`, for odd ghost
//! cells, so both problems are solved exactly by transforms. Gradients are
//! taken from the same series.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::{DensityField, GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bc", rename_all = "snake_case")]
pub enum EllipticConfig {
    /// `-Lap c + Lambda c = rho`, `dc/dn = 0`.
    NeumannScreened { lambda: f64 },
    /// `-Lap c = rho`, `c = 0` on the boundary.
    DirichletPoisson,
}

impl EllipticConfig {
    pub fn validate(&self) -> Result<()> {
        if let EllipticConfig::NeumannScreened { lambda } = *self {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(param("lambda_screen", lambda, "neumann problem needs Lambda > 0"));
            }
        }
        Ok(())
    }

    fn screening(&self) -> f64 {
        match *self {
            EllipticConfig::NeumannScreened { lambda } => lambda,
            EllipticConfig::DirichletPoisson => 0.0,
        }
    }

    fn neumann(&self) -> bool {
        matches!(self, EllipticConfig::NeumannScreened { .. })
    }
}

/// Solution together with its gradient (one field per axis).
#[derive(Debug, Clone)]
pub struct Chemo {
    pub c: ScalarField,
    pub grad: Vec<ScalarField>,
}

impl Chemo {
    /// Pointwise Euclidean norm of the gradient, maximized.
    pub fn grad_sup(&self) -> f64 {
        let n = self.c.values().len();
        (0..n)
            .map(|k| {
                self.grad
                    .iter()
                    .map(|g| g.values()[k] * g.values()[k])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Length-`2N` FFT helpers for series on cell centres of one axis.
#[derive(Clone)]
struct Axis {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Axis {
    fn new(n: usize, length: f64, planner: &mut FftPlanner<f64>) -> Self {
        Self {
            n,
            length,
            fwd: planner.plan_fft_forward(2 * n),
            inv: planner.plan_fft_inverse(2 * n),
        }
    }

    fn twiddle(&self, k: usize, sign: f64) -> Complex64 {
        let a = sign * std::f64::consts::PI * k as f64 / (2.0 * self.n as f64);
        Complex64::new(a.cos(), a.sin())
    }

    /// `X_k = sum_j x_j cos(pi k (j+1/2)/N)`, `k = 0..N-1`.
    fn dct2(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut buf: Vec<Complex64> = (0..2 * n)
            .map(|j| Complex64::new(if j < n { x[j] } else { x[2 * n - 1 - j] }, 0.0))
            .collect();
        self.fwd.process(&mut buf);
        for (k, o) in out.iter_mut().enumerate().take(n) {
            *o = 0.5 * (self.twiddle(k, -1.0) * buf[k]).re;
        }
    }

    /// `X_k = sum_j x_j sin(pi k (j+1/2)/N)`, returned for `k = 1..N` in
    /// slots `0..N-1`.
    fn dst2(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut buf: Vec<Complex64> = (0..2 * n)
            .map(|j| Complex64::new(if j < n { x[j] } else { -x[2 * n - 1 - j] }, 0.0))
            .collect();
        self.fwd.process(&mut buf);
        let half_i = Complex64::new(0.0, 0.5);
        for (slot, o) in out.iter_mut().enumerate().take(n) {
            let k = slot + 1;
            *o = (half_i * self.twiddle(k, -1.0) * buf[k]).re;
        }
    }

    /// Evaluates `sum_k a[k] e^{i pi k (j+1/2)/N}` at `j = 0..N-1`, where
    /// `a` is indexed from wavenumber `k0`.
    fn eval(&self, a: &[f64], k0: usize) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (idx, &v) in a.iter().enumerate() {
            let k = idx + k0;
            buf[k] = self.twiddle(k, 1.0) * v;
        }
        self.inv.process(&mut buf);
        buf.truncate(n);
        buf
    }

    fn cos_series(&self, a: &[f64]) -> Vec<f64> {
        self.eval(a, 0).into_iter().map(|z| z.re).collect()
    }

    fn sin_series(&self, b: &[f64], k0: usize) -> Vec<f64> {
        self.eval(b, k0).into_iter().map(|z| z.im).collect()
    }

    fn wavenumber(&self, k: usize) -> f64 {
        std::f64::consts::PI * k as f64 / self.length
    }

    /// Eigenvalue of the three-point operator `(2 c_j - c_{j-1} - c_{j+1})/h^2`
    /// for mode `k`.
    fn eigenvalue(&self, k: usize) -> f64 {
        let h = self.length / self.n as f64;
        let s = (std::f64::consts::PI * k as f64 / (2.0 * self.n as f64)).sin();
        4.0 * s * s / (h * h)
    }
}

/// Applies a 1d transform along `axis` of a row-major array.
fn along(grid: &GridSpec, axis: usize, data: &[f64], mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let nx = grid.n(0);
    let ny = if grid.dim() == 2 { grid.n(1) } else { 1 };
    let mut out = vec![0.0; data.len()];
    if axis == 0 {
        for j in 0..ny {
            let row = f(&data[j * nx..(j + 1) * nx]);
            out[j * nx..(j + 1) * nx].copy_from_slice(&row);
        }
    } else {
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            let res = f(&col);
            for j in 0..ny {
                out[j * nx + i] = res[j];
            }
        }
    }
    out
}

/// Spectral solver with transform plans cached for one grid.
#[derive(Clone)]
pub struct EllipticSolver {
    grid: GridSpec,
    cfg: EllipticConfig,
    axes: Vec<Axis>,
}

impl std::fmt::Debug for EllipticSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticSolver")
            .field("grid", &self.grid)
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl EllipticSolver {
    pub fn new(grid: GridSpec, cfg: EllipticConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        let axes = (0..grid.dim())
            .map(|a| Axis::new(grid.n(a), grid.length(a), &mut planner))
            .collect();
        Ok(Self { grid, cfg, axes })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &EllipticConfig {
        &self.cfg
    }

    /// Forward transform to modal coefficients (with the inverse
    /// normalization folded in), so that `c = sum coef * basis`.
    fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let neumann = self.cfg.neumann();
        let mut data = values.to_vec();
        for (a, ax) in self.axes.iter().enumerate() {
            let n = ax.n;
            data = along(&self.grid, a, &data, |x| {
                let mut out = vec![0.0; n];
                if neumann {
                    ax.dct2(x, &mut out);
                    out[0] /= n as f64;
                    for o in out.iter_mut().skip(1) {
                        *o *= 2.0 / n as f64;
                    }
                } else {
                    ax.dst2(x, &mut out);
                    for o in out.iter_mut().take(n - 1) {
                        *o *= 2.0 / n as f64;
                    }
                    out[n - 1] /= n as f64;
                }
                out
            });
        }
        data
    }

    fn mode(&self, axis: usize, slot: usize) -> usize {
        let _ = axis;
        if self.cfg.neumann() {
            slot
        } else {
            slot + 1
        }
    }

    /// Synthesizes point values at cell centres from modal coefficients,
    /// differentiating along `deriv` when given.
    fn synthesize(&self, coef: &[f64], deriv: Option<usize>) -> Vec<f64> {
        let neumann = self.cfg.neumann();
        let mut data = coef.to_vec();
        for (a, ax) in self.axes.iter().enumerate() {
            let differentiate = deriv == Some(a);
            data = along(&self.grid, a, &data, |b| {
                if !differentiate {
                    if neumann {
                        ax.cos_series(b)
                    } else {
                        ax.sin_series(b, 1)
                    }
                } else if neumann {
                    // d/dx cos(kx) = -k sin(kx)
                    let scaled: Vec<f64> = b.iter().enumerate().map(|(k, v)| -ax.wavenumber(k) * v).collect();
                    ax.sin_series(&scaled, 0)
                } else {
                    // d/dx sin(kx) = k cos(kx)
                    let mut scaled = vec![0.0; ax.n + 1];
                    for (slot, v) in b.iter().enumerate() {
                        scaled[slot + 1] = ax.wavenumber(slot + 1) * v;
                    }
                    ax.eval(&scaled, 0).into_iter().map(|z| z.re).collect()
                }
            });
        }
        data
    }

    /// Solves for `c`; the gradient is the exact derivative of the
    /// transform interpolant at the cell centres.
    pub fn solve(&self, rho: &DensityField) -> Result<Chemo> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let coef = self.solve_coefficients(rho.values());
        let c = ScalarField::new(self.grid, self.synthesize(&coef, None))?;
        let grad = (0..self.grid.dim())
            .map(|a| ScalarField::new(self.grid, self.synthesize(&coef, Some(a))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Chemo { c, grad })
    }

    /// Solves for `c` only.
    pub fn solve_c(&self, rho: &DensityField) -> Result<ScalarField> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let coef = self.solve_coefficients(rho.values());
        ScalarField::new(self.grid, self.synthesize(&coef, None))
    }

    fn solve_coefficients(&self, values: &[f64]) -> Vec<f64> {
        let mut coef = self.analyze(values);
        let screen = self.cfg.screening();
        let nx = self.grid.n(0);
        for (idx, v) in coef.iter_mut().enumerate() {
            let i = idx % nx;
            let j = idx / nx;
            let mut lam = screen + self.axes[0].eigenvalue(self.mode(0, i));
            if self.grid.dim() == 2 {
                lam += self.axes[1].eigenvalue(self.mode(1, j));
            }
            *v /= lam;
        }
        coef
    }

    /// `(-Lap_h + Lambda) c` with the configured ghost cells; used to check
    /// the discrete residual.
    pub fn apply_operator(&self, c: &ScalarField) -> Vec<f64> {
        let g = &self.grid;
        let v = c.values();
        let reflect = if self.cfg.neumann() { 1.0 } else { -1.0 };
        let mut out: Vec<f64> = v.iter().map(|x| self.cfg.screening() * x).collect();
        for axis in 0..g.dim() {
            let n = g.n(axis);
            let h2 = g.cell_width(axis).powi(2);
            let stride = if axis == 0 { 1 } else { g.n(0) };
            for (k, o) in out.iter_mut().enumerate() {
                let i = if axis == 0 { k % g.n(0) } else { k / g.n(0) };
                let left = if i == 0 { reflect * v[k] } else { v[k - stride] };
                let right = if i + 1 == n { reflect * v[k] } else { v[k + stride] };
                *o += (2.0 * v[k] - left - right) / h2;
            }
        }
        out
    }
}

/// One-shot solve.
pub fn solve(rho: &DensityField, cfg: &EllipticConfig) -> Result<ScalarField> {
    EllipticSolver::new(*rho.grid(), *cfg)?.solve_c(rho)
}

/// Empirical elliptic constant `(||c||_inf + ||grad c||_inf) / ||rho||_inf`.
pub fn regularity_ratio(rho: &DensityField, cfg: &EllipticConfig) -> Result<f64> {
    let solver = EllipticSolver::new(*rho.grid(), *cfg)?;
    regularity_ratio_with(&solver, rho)
}

pub fn regularity_ratio_with(solver: &EllipticSolver, rho: &DensityField) -> Result<f64> {
    let linf = rho.linf();
    if !(linf > 0.0) {
        return Err(param("rho", linf, "ratio needs a nonzero density"));
    }
    let chemo = solver.solve(rho)?;
    Ok((chemo.c.sup_abs() + chemo.grad_sup()) / linf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_matches_direct_sum() {
        let mut planner = FftPlanner::new();
        for n in [1usize, 2, 5, 8] {
            let ax = Axis::new(n, 1.0, &mut planner);
            let x: Vec<f64> = (0..n).map(|j| (j as f64 * 0.7).sin() + 0.3).collect();
            let mut c = vec![0.0; n];
            let mut s = vec![0.0; n];
            ax.dct2(&x, &mut c);
            ax.dst2(&x, &mut s);
            for k in 0..n {
                let arg = |j: usize, k: usize| std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64;
                let dc: f64 = (0..n).map(|j| x[j] * arg(j, k).cos()).sum();
                let ds: f64 = (0..n).map(|j| x[j] * arg(j, k + 1).sin()).sum();
                assert!((c[k] - dc).abs() < 1e-12);
                assert!((s[k] - ds).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unscreened_neumann() {
        let g = GridSpec::line(1.0, 8).unwrap();
        assert!(EllipticSolver::new(g, EllipticConfig::NeumannScreened { lambda: 0.0 }).is_err());
    }
}
