//! Exact quadratic transport between piecewise-constant densities on a line.
//!
//! A piecewise-constant density has a piecewise-linear CDF, so its quantile
//! function is piecewise linear in the mass variable `s` and the monotone
//! rearrangement can be integrated in closed form after merging breakpoints.

use crate::error::{Error, Result};
use crate::fields::{DensityField, GridSpec, ScalarField};

/// One positive-mass cell seen from the mass axis: on `[s0, s1]` the
/// quantile is `x0 + (s - s0) / rho`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub s0: f64,
    pub s1: f64,
    pub x0: f64,
    pub rho: f64,
}

impl Piece {
    pub fn at(&self, s: f64) -> f64 {
        self.x0 + (s - self.s0) / self.rho
    }
}

/// Quantile function of a piecewise-constant density.
#[derive(Debug, Clone)]
pub(crate) struct Quantile {
    pub pieces: Vec<Piece>,
    pub mass: f64,
    /// `cum[i]` is the mass left of edge `i`.
    pub cum: Vec<f64>,
    pub h: f64,
}

impl Quantile {
    /// `scale` multiplies the density (used to match a reference mass).
    pub fn new(values: &[f64], h: f64, scale: f64) -> Self {
        let mut cum = Vec::with_capacity(values.len() + 1);
        let mut pieces = Vec::new();
        let mut acc = 0.0;
        cum.push(0.0);
        for (i, &v) in values.iter().enumerate() {
            let rho = v * scale;
            let s1 = acc + rho * h;
            if rho > 0.0 && s1 > acc {
                pieces.push(Piece {
                    s0: acc,
                    s1,
                    x0: i as f64 * h,
                    rho,
                });
            }
            acc = s1;
            cum.push(acc);
        }
        Self {
            pieces,
            mass: acc,
            cum,
            h,
        }
    }

    /// Index of the piece active just right of `s` (the last piece when `s`
    /// is at the top).
    pub fn piece_right(&self, s: f64) -> usize {
        let k = self.pieces.partition_point(|p| p.s1 <= s);
        k.min(self.pieces.len() - 1)
    }

    /// Left-continuous quantile `inf {x : F(x) >= s}`.
    pub fn eval(&self, s: f64) -> f64 {
        let k = self.pieces.partition_point(|p| p.s1 < s);
        let p = self.pieces[k.min(self.pieces.len() - 1)];
        p.at(s.clamp(p.s0, p.s1))
    }

    /// Piecewise-linear CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.cum.len() - 1;
        let t = (x / self.h).clamp(0.0, n as f64);
        let i = (t.floor() as usize).min(n.saturating_sub(1));
        self.cum[i] + (self.cum[i + 1] - self.cum[i]) * (t - i as f64)
    }
}

/// `int_0^m (Q_a - Q_b)^2 ds` for two quantile functions of equal mass.
pub(crate) fn quantile_distance_sq(a: &Quantile, b: &Quantile) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let mut s = 0.0_f64;
    let mut total = 0.0;
    let top = a.mass.min(b.mass);
    while i < a.pieces.len() && j < b.pieces.len() {
        let pa = a.pieces[i];
        let pb = b.pieces[j];
        let end = pa.s1.min(pb.s1).min(top);
        if end > s {
            let d0 = pa.at(s) - pb.at(s);
            let d1 = pa.at(end) - pb.at(end);
            total += (end - s) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            s = end;
        }
        if pa.s1 <= s {
            i += 1;
        }
        if pb.s1 <= s {
            j += 1;
        }
        if s >= top {
            break;
        }
    }
    total
}

/// Quantile arrays at `K` mass nodes plus the monotone map at source
/// centres.
#[derive(Debug, Clone)]
pub struct TransportPlan1D {
    /// Mass nodes `s_k = (k + 1/2) m / K`.
    pub nodes: Vec<f64>,
    pub source_quantiles: Vec<f64>,
    pub target_quantiles: Vec<f64>,
    /// `T(x_i)` for every source cell centre.
    pub map: Vec<f64>,
}

impl TransportPlan1D {
    /// Largest deviation between consecutive-node mass of the target and the
    /// mass the map carries into that bin, `max_k |F_1(Q_1(s_k)) - s_k|`.
    pub fn pushforward_defect(&self, target: &DensityField) -> f64 {
        let h = target.grid().cell_width(0);
        let q = Quantile::new(target.values(), h, 1.0);
        self.nodes
            .iter()
            .zip(&self.target_quantiles)
            .map(|(&s, &x)| (q.cdf(x) - s).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    xa: f64,
    xb: f64,
    ta: f64,
    tb: f64,
    phi_a: f64,
}

impl Segment {
    fn map(&self, x: f64) -> f64 {
        if self.xb > self.xa {
            self.ta + (self.tb - self.ta) * (x - self.xa) / (self.xb - self.xa)
        } else {
            self.ta
        }
    }

    /// `phi(x) = phi(xa) + int_xa^x 2 (y - T(y)) dy`.
    fn phi(&self, x: f64) -> f64 {
        let t = self.map(x);
        self.phi_a + (x - self.xa) * ((self.xa + x) - (self.ta + t))
    }
}

/// Potential for the cost `|x - y|^2`, so `phi' = 2 (x - T(x))` and
/// `int phi drho0 + int phi^c drho1 = W2^2`. Normalized by `phi(0) = 0`.
#[derive(Debug, Clone)]
pub struct KantorovichPotential1D {
    /// `phi` at cell centres.
    pub values: ScalarField,
    segments: Vec<Segment>,
}

impl KantorovichPotential1D {
    fn segment(&self, x: f64) -> &Segment {
        let k = self.segments.partition_point(|s| s.xb < x);
        &self.segments[k.min(self.segments.len() - 1)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.segment(x).phi(x)
    }

    /// The optimal map `T(x)`.
    pub fn map(&self, x: f64) -> f64 {
        self.segment(x).map(x)
    }

    pub fn gradient(&self, x: f64) -> f64 {
        2.0 * (x - self.map(x))
    }

    /// `phi^c(y) = inf_x |x - y|^2 - phi(x)`. The inner function has
    /// derivative `2 (T(x) - y)`, nondecreasing in `x`, so the infimum sits
    /// where `T` crosses `y`.
    pub fn c_transform(&self, y: f64) -> f64 {
        let k = self.segments.partition_point(|s| s.tb < y);
        let seg = &self.segments[k.min(self.segments.len() - 1)];
        let x = if k >= self.segments.len() {
            seg.xb
        } else if seg.tb > seg.ta {
            (seg.xa + (y - seg.ta) / (seg.tb - seg.ta) * (seg.xb - seg.xa)).clamp(seg.xa, seg.xb)
        } else {
            seg.xa
        };
        (x - y) * (x - y) - seg.phi(x)
    }
}

#[derive(Debug, Clone)]
pub struct W2Solution1D {
    pub w2: f64,
    pub w2_sq: f64,
    pub plan: TransportPlan1D,
    pub potential: KantorovichPotential1D,
}

fn check_pair(rho0: &DensityField, rho1: &DensityField) -> Result<(f64, f64)> {
    if rho0.grid() != rho1.grid() {
        return Err(Error::GridMismatch);
    }
    if rho0.grid().dim() != 1 {
        return Err(Error::InvalidGrid("exact transport is one-dimensional".into()));
    }
    let m0 = rho0.mass();
    let m1 = rho1.mass();
    if !(m0 > 0.0) || !(m1 > 0.0) {
        return Err(Error::ZeroMass);
    }
    if (m0 - m1).abs() > 1e-10 * m0 {
        return Err(Error::MassMismatch(m0, m1));
    }
    Ok((m0, m1))
}

/// Exact `W2` between two equal-mass densities on a 1d grid.
pub fn w2_1d(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    Ok(w2_1d_sq(rho0, rho1)?.sqrt())
}

/// Exact `W2^2`.
pub fn w2_1d_sq(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    let (m0, m1) = check_pair(rho0, rho1)?;
    let h = rho0.grid().cell_width(0);
    let a = Quantile::new(rho0.values(), h, 1.0);
    let b = Quantile::new(rho1.values(), h, m0 / m1);
    Ok(quantile_distance_sq(&a, &b).max(0.0))
}

/// `W2` together with the quantile plan (on `4N` nodes) and the potential.
pub fn w2_1d_full(rho0: &DensityField, rho1: &DensityField) -> Result<W2Solution1D> {
    let (m0, m1) = check_pair(rho0, rho1)?;
    let grid: GridSpec = *rho0.grid();
    let h = grid.cell_width(0);
    let n = grid.n(0);
    let a = Quantile::new(rho0.values(), h, 1.0);
    let b = Quantile::new(rho1.values(), h, m0 / m1);
    let w2_sq = quantile_distance_sq(&a, &b).max(0.0);

    let k = 4 * n;
    let nodes: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) * a.mass / k as f64).collect();
    let source_quantiles = nodes.iter().map(|&s| a.eval(s)).collect();
    let target_quantiles = nodes.iter().map(|&s| b.eval(s)).collect();

    let segments = potential_segments(&a, &b, n);
    let tmp = KantorovichPotential1D {
        values: ScalarField::zeros(grid),
        segments,
    };
    let centers = grid.centers(0);
    let map = centers.iter().map(|&x| tmp.map(x)).collect();
    let phi = ScalarField::new(grid, centers.iter().map(|&x| tmp.eval(x)).collect())?;
    Ok(W2Solution1D {
        w2: w2_sq.sqrt(),
        w2_sq,
        plan: TransportPlan1D {
            nodes,
            source_quantiles,
            target_quantiles,
            map,
        },
        potential: KantorovichPotential1D {
            values: phi,
            segments: tmp.segments,
        },
    })
}

/// Linear pieces of `T = Q_b o F_a` over the whole axis, with `phi`
/// accumulated exactly from `x = 0`.
fn potential_segments(a: &Quantile, b: &Quantile, n: usize) -> Vec<Segment> {
    let h = a.h;
    let mut segs: Vec<Segment> = Vec::new();
    let mut phi = 0.0;
    let mut push = |xa: f64, xb: f64, ta: f64, tb: f64, phi: &mut f64| {
        let seg = Segment {
            xa,
            xb,
            ta,
            tb,
            phi_a: *phi,
        };
        *phi = seg.phi(xb);
        segs.push(seg);
    };
    for i in 0..n {
        let (xl, xr) = (i as f64 * h, (i + 1) as f64 * h);
        let (s0, s1) = (a.cum[i], a.cum[i + 1]);
        if s1 <= s0 {
            // No source mass: T is frozen at the next target quantile.
            let t = b.pieces[b.piece_right(s0)];
            let tv = t.at(s0.clamp(t.s0, t.s1));
            push(xl, xr, tv, tv, &mut phi);
            continue;
        }
        let rho = (s1 - s0) / h;
        let mut s = s0;
        let mut j = b.piece_right(s0);
        while s < s1 {
            let pb = b.pieces[j];
            let end = if j + 1 < b.pieces.len() { pb.s1.min(s1) } else { s1 };
            let end = if end <= s { s1 } else { end };
            let xa = xl + (s - s0) / rho;
            let xb = if end >= s1 { xr } else { xl + (end - s0) / rho };
            push(xa, xb, pb.at(s.max(pb.s0)), pb.at(end.min(pb.s1)), &mut phi);
            s = end;
            if j + 1 < b.pieces.len() {
                j += 1;
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(n: usize, lo: usize, hi: usize) -> DensityField {
        let g = GridSpec::line(2.0, n).unwrap();
        let v = (0..n).map(|i| if i >= lo && i < hi { 1.0 } else { 0.0 }).collect();
        DensityField::new(g, v).unwrap()
    }

    #[test]
    fn translation_is_exact() {
        let a = block(64, 0, 32);
        let b = block(64, 32, 64);
        let w = w2_1d(&a, &b).unwrap();
        assert!((w - 1.0).abs() < 1e-13, "{w}");
    }

    #[test]
    fn potential_gradient_matches_map() {
        let a = block(64, 0, 32);
        let b = block(64, 32, 64);
        let sol = w2_1d_full(&a, &b).unwrap();
        for &x in &[0.1, 0.5, 0.93] {
            assert!((sol.potential.map(x) - (x + 1.0)).abs() < 1e-12);
            assert!((sol.potential.gradient(x) + 2.0).abs() < 1e-12);
        }
    }
}
