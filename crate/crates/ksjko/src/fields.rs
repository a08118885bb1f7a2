//! Uniform cell-centred grids on `[0, L]` or `[0, Lx] x [0, Ly]` and the
//! fields that live on them.
//!
//! Values are cell averages. In two dimensions the storage is row-major with
//! `x` varying fastest, so cell `(i, j)` sits at `j * nx + i`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
}

impl GridSpec {
    pub fn new(lengths: &[f64], cells: &[usize]) -> Result<Self> {
        if lengths.len() != cells.len() || !(1..=2).contains(&lengths.len()) {
            return Err(Error::InvalidGrid(format!(
                "need one or two axes with matching lengths/cells, got {} and {}",
                lengths.len(),
                cells.len()
            )));
        }
        for (&l, &n) in lengths.iter().zip(cells) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis length {l} must be positive")));
            }
            if n == 0 {
                return Err(Error::InvalidGrid("axis needs at least one cell".into()));
            }
        }
        let mut g = GridSpec {
            dim: lengths.len(),
            lengths: [1.0; 2],
            cells: [1; 2],
        };
        g.lengths[..g.dim].copy_from_slice(lengths);
        g.cells[..g.dim].copy_from_slice(cells);
        Ok(g)
    }

    pub fn line(length: f64, cells: usize) -> Result<Self> {
        Self::new(&[length], &[cells])
    }

    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn n(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    /// Measure of one cell (`h` in 1d, `hx * hy` in 2d).
    pub fn cell_measure(&self) -> f64 {
        (0..self.dim).map(|a| self.cell_width(a)).product()
    }

    /// `|Omega|`.
    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn centers(&self, axis: usize) -> Vec<f64> {
        let h = self.cell_width(axis);
        (0..self.cells[axis]).map(|i| (i as f64 + 0.5) * h).collect()
    }

    /// Cell centre of flat index `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        let i = k % self.cells[0];
        let j = k / self.cells[0];
        [
            (i as f64 + 0.5) * self.cell_width(0),
            if self.dim == 2 {
                (j as f64 + 0.5) * self.cell_width(1)
            } else {
                0.0
            },
        ]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }
}

fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Nonnegative cell-averaged density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Clamps tiny negative round-off to zero before validating.
    pub fn from_clamped(grid: GridSpec, mut values: Vec<f64>) -> Result<Self> {
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for v in values.iter_mut() {
            if *v < 0.0 && *v >= -1e-12 * scale {
                *v = 0.0;
            }
        }
        Self::new(grid, values)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                f(p[0], p[1])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp(&self.values, self.grid.cell_measure(), p)
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::new(self.grid, values)
    }

    pub fn to_scalar(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.clone(),
        }
    }

    /// L1 distance with cell-measure weights.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        check_same(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_measure())
    }

    pub fn linf_distance(&self, other: &Self) -> Result<f64> {
        check_same(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn integrate_against(&self, phi: &ScalarField) -> Result<f64> {
        check_same(&self.grid, &phi.grid)?;
        Ok(dot(&self.values, &phi.values) * self.grid.cell_measure())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Snapshot CSV: header `x,rho` or `x,y,rho`, one row per cell centre.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.grid.dim == 1 {
            out.push_str("x,rho\n");
        } else {
            out.push_str("x,y,rho\n");
        }
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.point(k);
            if self.grid.dim == 1 {
                let _ = writeln!(out, "{},{}", fmt17(p[0]), fmt17(*v));
            } else {
                let _ = writeln!(out, "{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v));
            }
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = match cols.as_slice() {
            ["x", "rho"] => 1,
            ["x", "y", "rho"] => 2,
            _ => return Err(Error::Parse(format!("unexpected header `{header}`"))),
        };
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let nums = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", n + 2)))?;
            if nums.len() != dim + 1 {
                return Err(Error::Parse(format!("row {} has {} columns", n + 2, nums.len())));
            }
            rows.push(nums);
        }
        if rows.is_empty() {
            return Err(Error::Parse("snapshot has no rows".into()));
        }
        let axis_len = |coords: &mut Vec<f64>| -> Result<(f64, usize)> {
            coords.sort_by(f64::total_cmp);
            coords.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
            let n = coords.len();
            let h = if n > 1 {
                (coords[n - 1] - coords[0]) / (n - 1) as f64
            } else {
                2.0 * coords[0]
            };
            if !(h > 0.0) {
                return Err(Error::Parse("cannot infer cell width".into()));
            }
            Ok((h * n as f64, n))
        };
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let (lx, nx) = axis_len(&mut xs)?;
        let grid = if dim == 1 {
            GridSpec::line(lx, nx)?
        } else {
            let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let (ly, ny) = axis_len(&mut ys)?;
            GridSpec::rect(lx, ly, nx, ny)?
        };
        if rows.len() != grid.len() {
            return Err(Error::Parse(format!(
                "{} rows do not fill a {:?} grid",
                rows.len(),
                grid.cells()
            )));
        }
        let mut values = vec![0.0; grid.len()];
        let hx = grid.cell_width(0);
        let hy = grid.cell_width(1);
        for r in &rows {
            let i = ((r[0] / hx) - 0.5).round() as usize;
            let j = if dim == 2 {
                ((r[1] / hy) - 0.5).round() as usize
            } else {
                0
            };
            values[grid.index(i.min(grid.n(0) - 1), j.min(grid.n(1) - 1))] = r[dim];
        }
        Self::new(grid, values)
    }
}

/// Signed grid function (chemoattractant, potentials, residuals).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("scalar field has non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                f(p[0], p[1])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation between cell centres, constant beyond the
    /// outermost centres.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let locate = |axis: usize, t: f64| -> (usize, usize, f64) {
            let n = self.grid.n(axis);
            let s = t / self.grid.cell_width(axis) - 0.5;
            if n == 1 || s <= 0.0 {
                return (0, 0, 0.0);
            }
            if s >= (n - 1) as f64 {
                return (n - 1, n - 1, 0.0);
            }
            let i = s.floor() as usize;
            (i, i + 1, s - i as f64)
        };
        let (i0, i1, fx) = locate(0, x);
        if self.grid.dim == 1 {
            return self.values[i0] * (1.0 - fx) + self.values[i1] * fx;
        }
        let (j0, j1, fy) = locate(1, y);
        let v = |i, j| self.values[self.grid.index(i, j)];
        (v(i0, j0) * (1.0 - fx) + v(i1, j0) * fx) * (1.0 - fy) + (v(i0, j1) * (1.0 - fx) + v(i1, j1) * fx) * fy
    }
}

pub fn mass(rho: &DensityField) -> f64 {
    rho.mass()
}

/// Discrete `L^p` norm with cell-measure weights; `p = f64::INFINITY` gives
/// the max.
pub fn lp_norm(rho: &DensityField, p: f64) -> Result<f64> {
    rho.lp_norm(p)
}

fn lp(values: &[f64], w: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(crate::error::param("p", p, "lp norm needs p >= 1"));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if p == 1.0 {
        return Ok(values.iter().map(|v| v.abs()).sum::<f64>() * w);
    }
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    Ok(scale * (s * w).powf(1.0 / p))
}

/// Per-axis gradient: centred differences in the interior, one-sided
/// first-order differences at the boundary cells.
pub fn gradient(f: &ScalarField) -> Vec<ScalarField> {
    let g = f.grid;
    (0..g.dim)
        .map(|axis| {
            let n = g.n(axis);
            let h = g.cell_width(axis);
            let stride = if axis == 0 { 1 } else { g.n(0) };
            let mut out = vec![0.0; g.len()];
            if n > 1 {
                for (k, o) in out.iter_mut().enumerate() {
                    let i = if axis == 0 { k % g.n(0) } else { k / g.n(0) };
                    *o = if i == 0 {
                        (f.values[k + stride] - f.values[k]) / h
                    } else if i == n - 1 {
                        (f.values[k] - f.values[k - stride]) / h
                    } else {
                        (f.values[k + stride] - f.values[k - stride]) / (2.0 * h)
                    };
                }
            }
            ScalarField { grid: g, values: out }
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 17 significant digits, so snapshots round-trip exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
