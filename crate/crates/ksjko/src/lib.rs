//! Splitting minimizing-movement solver for the parabolic-elliptic
//! Keller-Segel system with nonlinear diffusion and a logistic source,
//!
//! ```text
//! d_t rho = div(rho grad U'(rho) - chi rho grad c) - rho F'(rho),
//! -Lap c + Lambda c = rho   (no-flux)   or   -Lap c = rho, c = 0 on the boundary,
//! ```
//!
//! built from alternating Wasserstein and Fisher-Rao proximal steps, plus the
//! machinery to check the step-wise estimates that make the scheme
//! well-posed: closed-form thresholds, transport and reaction distances,
//! Euler-Lagrange residuals and weak-form residuals.
//!
//! Module map:
//!
//! - [`fields`]: uniform grids, densities, norms, snapshot CSV.
//! - [`potentials`]: `(U, F)`, `J_tau`, `chi_star`, `xi`, `c0`, `C1..C9`.
//! - [`elliptic`]: spectral chemoattractant solve.
//! - [`metrics`]: exact 1d `W2`, entropic `W2`, Fisher-Rao, `WFR` upper bounds.
//! - [`jko`]: the two proximal steps and their optimality diagnostics.
//! - [`scheme`]: the alternating driver, trajectory checks, weak residual.
//! - [`cli`]: config files, scenarios and the `ksjko` command set.

pub mod cli;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod jko;
mod linalg;
pub mod metrics;
pub mod potentials;
pub mod scenarios;
pub mod scheme;

pub use error::{Error, Result};
pub use fields::{DensityField, GridSpec, ScalarField};
pub use potentials::{EntropyKind, EntropySpec, ReactionSpec, ThresholdInputs, ThresholdReport};
