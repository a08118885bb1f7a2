//! Named initial densities. Positions are fractions of the domain length.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::fields::{DensityField, GridSpec};
use crate::potentials::ReactionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitPreset {
    /// Constant `value`, by default the carrying capacity `s*`.
    Uniform {
        #[serde(default)]
        value: Option<f64>,
    },
    /// `base + height exp(-|x - center|^2 / width^2)`; in 2d the centre sits
    /// at mid-height.
    Bump {
        #[serde(default = "default_center")]
        center: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_height")]
        height: f64,
        #[serde(default = "default_base")]
        base: f64,
    },
    TwoBumps {
        #[serde(default = "default_centers")]
        centers: [f64; 2],
        #[serde(default = "default_two_width")]
        width: f64,
        #[serde(default = "default_height")]
        height: f64,
        #[serde(default = "default_base")]
        base: f64,
    },
    /// `s* (1 + amplitude cos(mode pi x / L))`.
    PerturbedUniform {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_mode")]
        mode: u32,
    },
}

fn default_center() -> f64 {
    0.35
}
fn default_width() -> f64 {
    0.1
}
fn default_height() -> f64 {
    3.0
}
fn default_base() -> f64 {
    0.2
}
fn default_centers() -> [f64; 2] {
    [0.3, 0.7]
}
fn default_two_width() -> f64 {
    0.08
}
fn default_amplitude() -> f64 {
    0.1
}
fn default_mode() -> u32 {
    1
}

impl InitPreset {
    pub fn uniform() -> Self {
        InitPreset::Uniform { value: None }
    }

    pub fn bump() -> Self {
        InitPreset::Bump {
            center: default_center(),
            width: default_width(),
            height: default_height(),
            base: default_base(),
        }
    }

    pub fn two_bumps() -> Self {
        InitPreset::TwoBumps {
            centers: default_centers(),
            width: default_two_width(),
            height: default_height(),
            base: default_base(),
        }
    }

    pub fn perturbed_uniform(amplitude: f64, mode: u32) -> Self {
        InitPreset::PerturbedUniform { amplitude, mode }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitPreset::Uniform { .. } => "uniform",
            InitPreset::Bump { .. } => "bump",
            InitPreset::TwoBumps { .. } => "two_bumps",
            InitPreset::PerturbedUniform { .. } => "perturbed_uniform",
        }
    }

    /// Samples the preset at the cell centres.
    pub fn build(&self, grid: GridSpec, reaction: &ReactionSpec) -> Result<DensityField> {
        let lx = grid.length(0);
        let ly = if grid.dim() == 2 { grid.length(1) } else { 0.0 };
        let gauss = move |x: f64, y: f64, c: f64, w: f64| {
            let dx = x - c * lx;
            let dy = if grid.dim() == 2 { y - 0.5 * ly } else { 0.0 };
            (-(dx * dx + dy * dy) / (w * w * lx * lx)).exp()
        };
        match *self {
            InitPreset::Uniform { value } => {
                let v = value.unwrap_or_else(|| reaction.carrying_capacity());
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(param("init.value", v, "must be finite and >= 0"));
                }
                DensityField::constant(grid, v)
            }
            InitPreset::Bump {
                center,
                width,
                height,
                base,
            } => {
                check_shape(width, height, base)?;
                DensityField::from_fn(grid, |x, y| base + height * gauss(x, y, center, width))
            }
            InitPreset::TwoBumps {
                centers,
                width,
                height,
                base,
            } => {
                check_shape(width, height, base)?;
                DensityField::from_fn(grid, |x, y| {
                    base + height * (gauss(x, y, centers[0], width) + gauss(x, y, centers[1], width))
                })
            }
            InitPreset::PerturbedUniform { amplitude, mode } => {
                if !(amplitude.abs() <= 1.0) {
                    return Err(param("init.amplitude", amplitude, "must lie in [-1, 1]"));
                }
                let s = reaction.carrying_capacity();
                let k = mode as f64 * std::f64::consts::PI / lx;
                DensityField::from_fn(grid, |x, _| s * (1.0 + amplitude * (k * x).cos()))
            }
        }
    }
}

fn check_shape(width: f64, height: f64, base: f64) -> Result<()> {
    if !(width > 0.0) {
        return Err(param("init.width", width, "must be > 0"));
    }
    if !(height >= 0.0) {
        return Err(param("init.height", height, "must be >= 0"));
    }
    if !(base >= 0.0) {
        return Err(param("init.base", base, "must be >= 0"));
    }
    Ok(())
}
