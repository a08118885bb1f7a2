//! `thresholds`, `chi-star` and `dist`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::metrics::{fr_distance, w2_1d, w2_entropic, wfr_upper_bound};
use crate::potentials::{chi_star, EntropySpec, ReactionSpec, ThresholdInputs, ThresholdReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdArgs {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub rho0_linf: f64,
    pub chi: f64,
    pub lambda: f64,
    /// Defaults to `rho0_linf * omega`.
    pub rho0_l1: Option<f64>,
    pub omega: f64,
    pub dim: usize,
    pub t_final: f64,
}

impl ThresholdArgs {
    pub fn reaction(&self) -> Result<ReactionSpec> {
        ReactionSpec::new(self.alpha, self.beta, self.r)
    }

    pub fn inputs(&self) -> Result<ThresholdInputs> {
        if !(self.rho0_linf > 0.0) {
            return Err(crate::error::param("rho0_linf", self.rho0_linf, "must be > 0"));
        }
        Ok(ThresholdInputs {
            rho0_linf: self.rho0_linf,
            rho0_l1: self.rho0_l1.unwrap_or(self.rho0_linf * self.omega),
            omega: self.omega,
            dim: self.dim,
            chi: self.chi,
            lambda: self.lambda,
            entropy: EntropySpec::boltzmann(),
            reaction: self.reaction()?,
            t_final: self.t_final,
        })
    }
}

fn row(out: &mut String, name: &str, v: f64) {
    let _ = writeln!(out, "{name:<14} {v:.10e}");
}

pub fn report_table(rep: &ThresholdReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:.10e}  ({})",
        "chi_star",
        rep.chi_star,
        rep.chi_star_case.label()
    );
    for (name, v) in [
        ("M_star", rep.m_star),
        ("eta", rep.eta),
        ("xi", rep.xi.xi),
        ("c0", rep.c0),
        ("delta_lambda", rep.delta_lambda),
        ("tau_star", rep.tau_star),
        ("tau_hat", rep.tau_hat),
        ("tau_tilde", rep.tau_tilde),
        ("tau_2star", rep.tau_2star),
        ("tau_max", rep.tau_max()),
        ("C1", rep.c1),
        ("C2", rep.c2),
        ("C3", rep.c3),
        ("C5", rep.c5),
    ] {
        row(&mut out, name, v);
    }
    out
}

pub fn report_json(rep: &ThresholdReport) -> String {
    serde_json::to_string_pretty(rep).expect("report serializes")
}

/// `chi_star` and its case only; defined for any valid reaction.
#[derive(Debug, Clone, Serialize)]
pub struct ChiStarOutput {
    #[serde(serialize_with = "crate::potentials::ext_f64::serialize")]
    pub chi_star: f64,
    pub case: &'static str,
}

pub fn chi_star_output(args: &ThresholdArgs) -> Result<ChiStarOutput> {
    let f = args.reaction()?;
    if !(args.rho0_linf > 0.0) {
        return Err(crate::error::param("rho0_linf", args.rho0_linf, "must be > 0"));
    }
    let cs = chi_star(args.rho0_linf, &f);
    Ok(ChiStarOutput {
        chi_star: cs.value,
        case: cs.case.label(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    W2,
    W2Entropic,
    Fr,
    WfrUpper,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistOutput {
    pub metric: &'static str,
    pub value: f64,
}

pub fn dist(a: &Path, b: &Path, metrics: &[Metric], eps: f64) -> Result<Vec<DistOutput>> {
    let read = |p: &Path| DensityField::read_csv(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())));
    let (ra, rb) = (read(a)?, read(b)?);
    metrics
        .iter()
        .map(|m| {
            Ok(match m {
                Metric::W2 => DistOutput {
                    metric: "w2",
                    value: w2_1d(&ra, &rb)?,
                },
                Metric::W2Entropic => DistOutput {
                    metric: "w2_entropic",
                    value: w2_entropic(&ra, &rb, eps)?,
                },
                Metric::Fr => DistOutput {
                    metric: "fr",
                    value: fr_distance(&ra, &rb)?,
                },
                Metric::WfrUpper => DistOutput {
                    metric: "wfr_upper",
                    value: wfr_upper_bound(&ra, &rb)?,
                },
            })
        })
        .collect()
}
