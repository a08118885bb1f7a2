//! The convex pair `(U, F)`: internal energy density for the diffusion and
//! reaction potential for the logistic source, plus the step map `J_tau` of
//! the Fisher-Rao step and every closed-form threshold constant.

mod thresholds;

pub use thresholds::*;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyKind {
    /// `U(s) = s log s`
    Boltzmann,
    /// `U(s) = s^m / (m - 1)`
    Power { m: f64 },
}

/// `U_delta(s) = U(s) + delta * s log s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySpec {
    pub kind: EntropyKind,
    pub delta: f64,
}

/// Regularization used when a family fails `inf t U''(t) > 0`.
pub const DEFAULT_DELTA: f64 = 1e-6;

fn xlogx(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

impl EntropySpec {
    pub fn boltzmann() -> Self {
        Self {
            kind: EntropyKind::Boltzmann,
            delta: 0.0,
        }
    }

    pub fn power(m: f64) -> Result<Self> {
        Self::new(EntropyKind::Power { m }, 0.0)
    }

    pub fn new(kind: EntropyKind, delta: f64) -> Result<Self> {
        if let EntropyKind::Power { m } = kind {
            if !(m > 0.0) || m == 1.0 || !m.is_finite() {
                return Err(param("m", m, "power entropy needs m > 0, m != 1"));
            }
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(param("delta", delta, "regularization must be >= 0"));
        }
        Ok(Self { kind, delta })
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.kind, delta)
    }

    pub fn u(&self, s: f64) -> f64 {
        let base = match self.kind {
            EntropyKind::Boltzmann => xlogx(s),
            EntropyKind::Power { m } => s.powf(m) / (m - 1.0),
        };
        base + self.delta * xlogx(s)
    }

    /// `U'(s)`; `-inf` at `s = 0` for the logarithmic parts.
    pub fn du(&self, s: f64) -> f64 {
        let log_part = if s > 0.0 { s.ln() + 1.0 } else { f64::NEG_INFINITY };
        let base = match self.kind {
            EntropyKind::Boltzmann => log_part,
            EntropyKind::Power { m } => {
                if s > 0.0 {
                    m / (m - 1.0) * s.powf(m - 1.0)
                } else if m > 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        if self.delta > 0.0 {
            base + self.delta * log_part
        } else {
            base
        }
    }

    pub fn d2u(&self, s: f64) -> f64 {
        let base = match self.kind {
            EntropyKind::Boltzmann => 1.0 / s,
            EntropyKind::Power { m } => m * s.powf(m - 2.0),
        };
        base + self.delta / s
    }

    /// `Psi(s) = s U'(s) - U(s)`, the pressure; `Psi(0)` is the limit value.
    pub fn psi(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let base = match self.kind {
            EntropyKind::Boltzmann => s,
            EntropyKind::Power { m } => s.powf(m),
        };
        base + self.delta * s
    }

    /// Limit of `s U'(s)` as `s -> 0+` (zero for both families).
    pub fn s_du_at_zero(&self) -> f64 {
        0.0
    }

    /// `inf_{t > 0} t U''(t) > 0`, needed for the Euler-Lagrange structure of
    /// the Wasserstein step.
    pub fn has_positive_t_d2u(&self) -> bool {
        match self.kind {
            EntropyKind::Boltzmann => true,
            EntropyKind::Power { .. } => self.delta > 0.0,
        }
    }

    /// Checks `U'' > 0` on sample points and that `s U'(s)` settles as
    /// `s -> 0+`.
    pub fn check_assumptions(&self) -> Result<()> {
        for &s in &[1e-9, 1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let c = self.d2u(s);
            if !(c > 0.0) {
                return Err(param("s", s, "U'' must be positive"));
            }
        }
        let a = 1e-8 * self.du(1e-8);
        let b = 1e-12 * self.du(1e-12);
        if !((a - b).abs() <= 1e-6) {
            return Err(param("s", 1e-8, "s U'(s) does not settle as s -> 0"));
        }
        Ok(())
    }

    /// Same spec, with the default regularization switched on when the family
    /// lacks `inf t U'' > 0`.
    pub fn regularized_if_needed(self) -> Self {
        if self.has_positive_t_d2u() {
            self
        } else {
            Self {
                delta: DEFAULT_DELTA,
                ..self
            }
        }
    }

    /// Solves `U'(s) = q` for `s >= 0`, returning `0` when `q` is below the
    /// range of `U'` and `+inf` when it is above.
    pub fn du_inverse(&self, q: f64) -> f64 {
        match (self.kind, self.delta) {
            (EntropyKind::Boltzmann, d) => ((q / (1.0 + d)) - 1.0).exp(),
            (EntropyKind::Power { m }, d) if d == 0.0 => {
                let y = (m - 1.0) * q / m;
                if y <= 0.0 {
                    if m > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    y.powf(1.0 / (m - 1.0))
                }
            }
            _ => self.du_inverse_newton(q),
        }
    }

    /// Safeguarded Newton on `t = log s`, where `U'(e^t)` is increasing.
    fn du_inverse_newton(&self, q: f64) -> f64 {
        let g = |t: f64| self.du(t.exp()) - q;
        let mut lo = -50.0_f64;
        let mut hi = 50.0_f64;
        while g(lo) > 0.0 {
            lo *= 2.0;
            if lo < -1e4 {
                return 0.0;
            }
        }
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e4 {
                return f64::INFINITY;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let v = g(t);
            if v == 0.0 {
                break;
            }
            if v < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let s = t.exp();
            let slope = s * self.d2u(s);
            let mut next = t - v / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * t.abs().max(1.0) {
                t = next;
                break;
            }
            t = next;
        }
        t.exp()
    }
}

/// Logistic reaction `F(s) = beta s^r / r - alpha s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
}

impl ReactionSpec {
    pub fn new(alpha: f64, beta: f64, r: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(param("alpha", alpha, "must be >= 0"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(param("beta", beta, "must be > 0"));
        }
        if !(r > 1.0 && r.is_finite()) {
            return Err(param("r", r, "must be > 1"));
        }
        Ok(Self { alpha, beta, r })
    }

    pub fn f(&self, s: f64) -> f64 {
        self.beta * s.powf(self.r) / self.r - self.alpha * s
    }

    pub fn df(&self, s: f64) -> f64 {
        self.beta * s.powf(self.r - 1.0) - self.alpha
    }

    pub fn d2f(&self, s: f64) -> f64 {
        self.beta * (self.r - 1.0) * s.powf(self.r - 2.0)
    }

    /// Spatially uniform steady state, `F'(s*) = 0`.
    pub fn carrying_capacity(&self) -> f64 {
        (self.alpha / self.beta).powf(1.0 / (self.r - 1.0))
    }

    /// `sup_{[0, c]} |F'|`; `F'` is increasing from `-alpha`.
    pub fn sup_abs_df(&self, c: f64) -> f64 {
        self.alpha.max(self.df(c).abs())
    }

    /// Largest step for which `J_tau` is invertible: `1/(2 alpha)`, or
    /// infinity without growth.
    pub fn tau_limit(&self) -> f64 {
        if self.alpha > 0.0 {
            1.0 / (2.0 * self.alpha)
        } else {
            f64::INFINITY
        }
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(param("tau", tau, "step must be positive"));
        }
        let limit = self.tau_limit();
        if tau >= limit {
            return Err(Error::StepTooLarge { tau, limit });
        }
        Ok(())
    }

    /// `J_tau(s) = s + tau s F'(s) + tau^2/4 s F'(s)^2 = s (1 + tau F'(s)/2)^2`.
    pub fn j_tau(&self, s: f64, tau: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let a = 1.0 + 0.5 * tau * self.df(s);
        s * a * a
    }

    pub fn j_tau_prime(&self, s: f64, tau: f64) -> f64 {
        let a = 1.0 + 0.5 * tau * self.df(s);
        let d2 = if s > 0.0 { self.d2f(s) } else { 0.0 };
        let sd2 = if s > 0.0 { s * d2 } else { 0.0 };
        a * (a + tau * sd2)
    }

    /// Inverse of `J_tau` by Newton's method safeguarded with a bisection
    /// bracket. Needs `tau < 1/(2 alpha)`.
    pub fn j_tau_inverse(&self, rho: f64, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(param("rho", rho, "must be finite and >= 0"));
        }
        Ok(self.j_inv_unchecked(rho, tau))
    }

    pub(crate) fn j_inv_unchecked(&self, rho: f64, tau: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let floor = 1.0 - 0.5 * tau * self.alpha;
        let mut lo = 0.0;
        let mut hi = rho / (floor * floor);
        // J(s) >= s whenever F'(s) >= 0, so the bracket can shrink to rho.
        if self.df(rho) >= 0.0 {
            hi = hi.min(rho);
        } else {
            lo = rho;
        }
        let mut s = rho.clamp(lo, hi);
        for _ in 0..200 {
            let v = self.j_tau(s, tau) - rho;
            if v == 0.0 {
                return s;
            }
            if v < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = self.j_tau_prime(s, tau);
            let mut next = s - v / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let step = (next - s).abs();
            s = next;
            if step <= 2.0 * f64::EPSILON * s || hi - lo <= 2.0 * f64::EPSILON * hi {
                break;
            }
        }
        s
    }
}
