//! Closed-form admissibility constants: the critical sensitivity `chi_star`,
//! the balance level `eta_M`, the choice of `M*`, the mass bound `xi`, the
//! constant `c0`, the step thresholds and `C1..C9`.

use serde::{Deserialize, Serialize};

use super::{EntropySpec, ReactionSpec};
use crate::error::{param, Error, Result};

/// `eta_M = ((alpha + M)/beta)^(1/(r-1))`.
pub fn eta(m: f64, f: &ReactionSpec) -> f64 {
    ((f.alpha + m) / f.beta).powf(1.0 / (f.r - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiStarCase {
    RAbove2,
    REquals2,
    LargeData,
    SmallData,
}

impl ChiStarCase {
    pub fn label(&self) -> &'static str {
        match self {
            ChiStarCase::RAbove2 => "r>2",
            ChiStarCase::REquals2 => "r=2",
            ChiStarCase::LargeData => "1<r<2, large data",
            ChiStarCase::SmallData => "1<r<2, small data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiStar {
    pub value: f64,
    pub case: ChiStarCase,
}

/// Data level separating the two `1 < r < 2` branches.
pub fn chi_star_case_boundary(f: &ReactionSpec) -> f64 {
    (f.alpha / (f.beta * (2.0 - f.r))).powf(1.0 / (f.r - 1.0))
}

pub fn chi_star_large_data(rho0_linf: f64, f: &ReactionSpec) -> f64 {
    (f.beta * rho0_linf.powf(f.r - 1.0) - f.alpha) / rho0_linf
}

pub fn chi_star_small_data(f: &ReactionSpec) -> f64 {
    let r = f.r;
    f.alpha.powf((2.0 - r) / (1.0 - r))
        * f.beta.powf(1.0 / (r - 1.0))
        * (2.0 - r).powf((2.0 - r) / (r - 1.0))
        * (r - 1.0)
}

pub fn chi_star(rho0_linf: f64, f: &ReactionSpec) -> ChiStar {
    if f.r > 2.0 {
        ChiStar {
            value: f64::INFINITY,
            case: ChiStarCase::RAbove2,
        }
    } else if f.r == 2.0 {
        ChiStar {
            value: f.beta,
            case: ChiStarCase::REquals2,
        }
    } else if rho0_linf > chi_star_case_boundary(f) {
        ChiStar {
            value: chi_star_large_data(rho0_linf, f),
            case: ChiStarCase::LargeData,
        }
    } else {
        ChiStar {
            value: chi_star_small_data(f),
            case: ChiStarCase::SmallData,
        }
    }
}

/// `theta(tau) = (1 + tau M)(1/q - lambda chi tau)` with `q` either
/// `||rho0||_inf` or `eta`.
pub fn theta(m: f64, tau: f64, q: f64, lambda: f64, chi: f64) -> f64 {
    (1.0 + tau * m) * (1.0 / q - lambda * chi * tau)
}

/// Largest `tau <= 1` with `theta_q(tau) >= theta_q(0)` for every `q`,
/// located by bisection.
pub fn tau_star(m: f64, qs: &[f64], lambda: f64, chi: f64) -> f64 {
    let ok = |tau: f64| {
        qs.iter()
            .all(|&q| theta(m, tau, q, lambda, chi) >= theta(m, 0.0, q, lambda, chi))
    };
    if ok(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

fn inf_over(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

/// Upper end of the `M` search grid.
pub fn m_max(f: &ReactionSpec) -> f64 {
    1e6 * 1.0_f64.max(f.alpha).max(f.beta)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
}

/// Step restriction implied by a candidate `M`: the `theta` window and the
/// `M`-dependent parts of the remaining thresholds.
fn step_room(m: f64, rho0_linf: f64, f: &ReactionSpec, lambda: f64, chi: f64) -> f64 {
    let eta_m = eta(m, f);
    let big = eta_m.max(rho0_linf);
    let window = tau_star(m, &[rho0_linf, eta_m], lambda, chi);
    let tilde = 1.0 / (2.0 * lambda * chi * big);
    let k0 = f.sup_abs_df(2.0 * big);
    window.min(tilde).min(1.0 / (6.0 * k0))
}

/// Chooses `M*` so that both `theta` functions start increasing:
/// `M/||rho0||_inf > lambda chi` and `M/eta_M > lambda chi`.
///
/// For `1 < r < 2` the two closed-form maximizers are used. For `r >= 2` the
/// supremum of `min(M/eta_M, M/||rho0||_inf)` is not attained, so among the
/// admissible points of a log grid on `[1e-6, M_max]` we take the one that
/// leaves the most room for the step size.
pub fn select_m_star(rho0_linf: f64, f: &ReactionSpec, lambda: f64, chi: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(param("lambda", lambda, "must be > 1"));
    }
    if !(chi >= 0.0) {
        return Err(param("chi", chi, "must be >= 0"));
    }
    if !(rho0_linf > 0.0) {
        return Err(param("rho0_linf", rho0_linf, "must be > 0"));
    }
    let cs = chi_star(rho0_linf, f);
    if lambda * chi >= cs.value {
        return Err(Error::ChiAboveThreshold {
            lambda_chi: lambda * chi,
            chi_star: cs.value,
        });
    }
    match cs.case {
        ChiStarCase::LargeData => Ok(f.beta * rho0_linf.powf(f.r - 1.0) - f.alpha),
        ChiStarCase::SmallData => Ok(f.alpha * (f.r - 1.0) / (2.0 - f.r)),
        _ => {
            let lc = lambda * chi;
            let mut best: Option<(f64, f64)> = None;
            for m in log_grid(1e-6, m_max(f), 4001) {
                if m / rho0_linf <= lc || m / eta(m, f) <= lc {
                    continue;
                }
                let room = step_room(m, rho0_linf, f, lambda, chi);
                if best.map_or(true, |(_, b)| room > b) {
                    best = Some((m, room));
                }
            }
            best.map(|(m, _)| m).ok_or(Error::ChiAboveThreshold {
                lambda_chi: lc,
                chi_star: cs.value,
            })
        }
    }
}

/// Constants of the mass recurrence `m_{n+1} <= (m_n + tau B)/(1 + tau A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiReport {
    pub xi: f64,
    pub eps: f64,
    pub a_eps: f64,
    pub b_eps: f64,
}

impl XiReport {
    /// Right-hand side of the one-step mass recurrence.
    pub fn recurrence(&self, mass: f64, tau: f64) -> f64 {
        (mass + tau * self.b_eps) / (1.0 + tau * self.a_eps)
    }
}

fn holder_k0(r: f64, omega: f64) -> f64 {
    let r_conj = r / (r - 1.0);
    omega.powf(1.0 / r_conj)
}

pub fn a_eps(eps: f64, f: &ReactionSpec, omega: f64) -> f64 {
    f.beta * holder_k0(f.r, omega).powf(-f.r) / eps - f.alpha
}

pub fn b_eps(eps: f64, f: &ReactionSpec, omega: f64) -> f64 {
    let r_conj = f.r / (f.r - 1.0);
    let c_eps = (f.r * eps).powf(-1.0 / (f.r - 1.0)) / r_conj;
    f.beta * holder_k0(f.r, omega).powf(-f.r) * c_eps / eps
}

/// `xi = max(||rho0||_1, inf_eps B_eps / A_eps)` over a log grid of `eps`
/// with `A_eps > 0`, refined by golden-section search.
pub fn xi(rho0_l1: f64, f: &ReactionSpec, omega: f64) -> XiReport {
    let scale = f.beta * holder_k0(f.r, omega).powf(-f.r);
    let eps_hi = if f.alpha > 0.0 {
        scale / f.alpha * (1.0 - 1e-9)
    } else {
        1e8 * scale
    };
    let eps_lo = eps_hi * 1e-16;
    let ratio = |e: f64| {
        let a = a_eps(e, f, omega);
        if a > 0.0 {
            b_eps(e, f, omega) / a
        } else {
            f64::INFINITY
        }
    };
    let grid: Vec<f64> = log_grid(eps_lo, eps_hi, 2001).collect();
    let (mut k_best, mut v_best) = (0, f64::INFINITY);
    for (k, &e) in grid.iter().enumerate() {
        let v = ratio(e);
        if v < v_best {
            k_best = k;
            v_best = v;
        }
    }
    let mut a = grid[k_best.saturating_sub(1)].ln();
    let mut b = grid[(k_best + 1).min(grid.len() - 1)].ln();
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio(c.exp()) < ratio(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut eps = (0.5 * (a + b)).exp();
    if ratio(eps) > v_best {
        eps = grid[k_best];
    }
    let (a_e, b_e) = (a_eps(eps, f, omega), b_eps(eps, f, omega));
    XiReport {
        xi: rho0_l1.max(b_e / a_e),
        eps,
        a_eps: a_e,
        b_eps: b_e,
    }
}

/// `delta(lambda)`, the largest `x` in `(0, cap]` with
/// `(1 + x)^d <= 1 + lambda d x`, and `c0 = d delta / (chi (1 + delta)^d)`.
pub fn c0_and_delta(lambda: f64, chi: f64, d: usize) -> Result<(f64, f64)> {
    if !(lambda > 1.0) {
        return Err(param("lambda", lambda, "must be > 1"));
    }
    if d == 0 {
        return Err(param("d", 0.0, "dimension must be >= 1"));
    }
    let df = d as f64;
    let cap = if d == 1 {
        1.0
    } else {
        (1.0 / (2.0 * (df - 1.0))).min(1.0)
    };
    let holds = |x: f64| (1.0 + x).powi(d as i32) <= 1.0 + lambda * df * x;
    let delta = if holds(cap) {
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let c0 = df * delta / (chi * (1.0 + delta).powi(d as i32));
    Ok((c0, delta))
}

fn sample_extrema(lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = 4000;
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for k in 0..=n {
        let s = lo + (hi - lo) * k as f64 / n as f64;
        let v = g(s);
        if v.is_finite() {
            mn = mn.min(v);
            mx = mx.max(v);
        }
    }
    (mn, mx)
}

/// Everything the thresholds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub rho0_linf: f64,
    pub rho0_l1: f64,
    pub omega: f64,
    pub dim: usize,
    pub chi: f64,
    pub lambda: f64,
    pub entropy: EntropySpec,
    pub reaction: ReactionSpec,
    pub t_final: f64,
}

/// Threshold constants for one configuration. Fields that can be infinite
/// serialize as the strings `"inf"` / `"-inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub inputs: ThresholdInputs,
    #[serde(with = "ext_f64")]
    pub chi_star: f64,
    pub chi_star_case: ChiStarCase,
    pub m_star: f64,
    pub eta: f64,
    pub xi: XiReport,
    #[serde(with = "ext_f64")]
    pub c0: f64,
    pub delta_lambda: f64,
    pub tau_star: f64,
    #[serde(with = "ext_f64")]
    pub tau_hat: f64,
    #[serde(with = "ext_f64")]
    pub tau_tilde: f64,
    #[serde(with = "ext_f64")]
    pub tau_2star: f64,
    /// `max(eta, ||rho0||_inf)`, the bound on every full step.
    pub full_step_bound: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c5: f64,
    /// `sup_{[0, C1]} |F'|`.
    pub sup_abs_df: f64,
}

impl ThresholdReport {
    pub fn compute(inp: ThresholdInputs) -> Result<Self> {
        let f = &inp.reaction;
        if !(inp.omega > 0.0) {
            return Err(param("omega", inp.omega, "domain measure must be > 0"));
        }
        if !(inp.t_final > 0.0) {
            return Err(param("t_final", inp.t_final, "must be > 0"));
        }
        let cs = chi_star(inp.rho0_linf, f);
        let m_star = select_m_star(inp.rho0_linf, f, inp.lambda, inp.chi)?;
        let eta_m = eta(m_star, f);
        let xi_rep = xi(inp.rho0_l1, f, inp.omega);
        let (c0, delta) = c0_and_delta(inp.lambda, inp.chi, inp.dim)?;
        let t_star = tau_star(m_star, &[inp.rho0_linf, eta_m], inp.lambda, inp.chi);
        let tau_hat = inf_over(
            [
                f.tau_limit(),
                c0 / inp.rho0_linf,
                t_star,
                c0 / eta_m,
                inp.omega / (inp.chi * xi_rep.xi),
            ]
            .into_iter(),
        );
        let lc = inp.lambda * inp.chi;
        let tau_tilde = (1.0 / (2.0 * lc * inp.rho0_linf)).min(1.0 / (2.0 * lc * eta_m));
        let full_step_bound = eta_m.max(inp.rho0_linf);
        let c1 = 2.0 * full_step_bound;
        let k0 = f.sup_abs_df(c1);
        let tau_2star = (1.0 / (6.0 * k0)).min(1.0 / (4.0 * f.alpha));
        let c2 = c1 * k0;
        let u = &inp.entropy;
        let (inf_s_du, _) = sample_extrema(0.0, c1, |s| if s > 0.0 { s * u.du(s) } else { 0.0 });
        let du_2c1 = u.du(2.0 * c1);
        let c3 = (2.0 * f.alpha * c1 * du_2c1 - 3.0 * k0 * inf_s_du) * inp.omega;
        let c5 = (4.0 * k0 * c1 * du_2c1 + f.alpha * f.alpha * c1) * inp.omega;
        Ok(Self {
            inputs: inp,
            chi_star: cs.value,
            chi_star_case: cs.case,
            m_star,
            eta: eta_m,
            xi: xi_rep,
            c0,
            delta_lambda: delta,
            tau_star: t_star,
            tau_hat,
            tau_tilde,
            tau_2star,
            full_step_bound,
            c1,
            c2,
            c3,
            c5,
            sup_abs_df: k0,
        })
    }

    /// `min(tau_hat, tau_tilde, tau_**)`.
    pub fn tau_max(&self) -> f64 {
        self.tau_hat.min(self.tau_tilde).min(self.tau_2star)
    }

    /// Analytic bounds on `E1` over `{0 <= rho <= C1}`, given the elliptic
    /// ratio `k3`: `(inf, sup)`.
    pub fn e1_bounds(&self, k3: f64) -> (f64, f64) {
        let u = &self.inputs.entropy;
        let (u_min, u_max) = sample_extrema(0.0, self.c1, |s| u.u(s));
        let omega = self.inputs.omega;
        let interaction = 0.5 * self.inputs.chi * k3 * self.c1 * self.c1 * omega;
        (u_min.min(0.0) * omega - interaction, u_max.max(0.0) * omega)
    }

    /// Assembles `C4, C6..C9` from the elliptic ratio and energy data.
    /// Empirical extremes of `E1` only widen the analytic bracket.
    pub fn trajectory_constants(
        &self,
        k3: f64,
        e1_rho0: f64,
        e1_inf_seen: f64,
        e1_sup_seen: f64,
    ) -> TrajectoryConstants {
        let omega = self.inputs.omega;
        let t = self.inputs.t_final;
        let chi = self.inputs.chi;
        let (a_inf, a_sup) = self.e1_bounds(k3);
        let e1_inf = a_inf.min(e1_inf_seen).min(e1_rho0);
        let e1_sup = a_sup.max(e1_sup_seen).max(e1_rho0);
        let c4 = 2.0 * chi * k3 * k3 * self.c1 * self.c2 * omega;
        let c6 = 2.0 * (2.0 * t * self.c5 + (self.c3 + c4) * t + e1_sup - e1_inf);
        let c7 = e1_rho0 - e1_inf + (self.c3 + c4) * (t + 1.0);
        let c8 = k3 * k3 * self.c1.powi(3) * omega * t;
        let c9 = 2.0 * self.c1 * (c7 + chi * chi * c8);
        TrajectoryConstants {
            k3,
            e1_inf,
            e1_sup,
            c4,
            c6,
            c7,
            c8,
            c9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConstants {
    pub k3: f64,
    pub e1_inf: f64,
    pub e1_sup: f64,
    pub c4: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
}

/// Serializes non-finite floats as strings so reports stay valid JSON.
pub(crate) mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(a: f64, b: f64, r: f64) -> ReactionSpec {
        ReactionSpec::new(a, b, r).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert!((eta(3.0, &rs(1.0, 2.0, 2.0)) - 2.0).abs() < 1e-15);
        assert!((eta(2.0, &rs(1.0, 1.0, 1.5)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn chi_star_cases() {
        assert_eq!(chi_star(3.0, &rs(0.0, 1.0, 3.0)).value, f64::INFINITY);
        assert_eq!(chi_star(1.0, &rs(1.0, 2.0, 2.0)).value, 2.0);
        let big = chi_star(9.0, &rs(1.0, 1.0, 1.5));
        assert_eq!(big.case, ChiStarCase::LargeData);
        assert!((big.value - 2.0 / 9.0).abs() < 1e-14);
        let small = chi_star(1.0, &rs(1.0, 1.0, 1.5));
        assert_eq!(small.case, ChiStarCase::SmallData);
        assert!((small.value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn c0_examples() {
        let (c0, d) = c0_and_delta(1.5, 2.0, 1).unwrap();
        assert_eq!(d, 1.0);
        assert!((c0 - 0.25).abs() < 1e-15);
        let (c0, d) = c0_and_delta(2.0, 1.0, 2).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!((c0 - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_fields_round_trip_through_json() {
        let inp = ThresholdInputs {
            rho0_linf: 1.0,
            rho0_l1: 1.0,
            omega: 1.0,
            dim: 1,
            chi: 0.0,
            lambda: 1.01,
            entropy: EntropySpec::boltzmann(),
            reaction: rs(0.0, 1.0, 3.0),
            t_final: 1.0,
        };
        let rep = ThresholdReport::compute(inp).unwrap();
        assert_eq!(rep.chi_star, f64::INFINITY);
        let text = serde_json::to_string(&rep).unwrap();
        let back: ThresholdReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
