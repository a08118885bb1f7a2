//! `ksjko validate`: the step-wise estimates, metric identities and
//! refinement studies over the built-in scenario library.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::EllipticConfig;
use crate::error::Result;
use crate::fields::{DensityField, GridSpec};
use crate::jko::{fr_step_estimates, w2_step, w2_step_el_residual, ModelParams, W2Backend, W2StepConfig};
use crate::metrics::{fr_distance, w2_1d, w2_1d_full, wfr_upper_bound};
use crate::potentials::{EntropySpec, ReactionSpec, ThresholdReport};
use crate::scenarios::InitPreset;
use crate::scheme::{
    check_energy_gaps, check_flux_bound, check_holder, check_l1_bound, check_two_solutions_gap, check_uniform_bounds,
    run, weak_residual, SchemeConfig, TestFunction, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lemmas,
    Metrics,
    Convergence,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub scenario: String,
    pub check: &'static str,
    /// The inequality being checked, in words.
    pub estimate: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `bound - value`; negative means failed.
    pub margin: f64,
}

impl CheckRow {
    fn new(scenario: &str, check: &'static str, estimate: &'static str, value: f64, bound: f64) -> Self {
        Self {
            scenario: scenario.to_string(),
            check,
            estimate,
            value,
            bound,
            margin: bound - value,
        }
    }

    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub rows: Vec<CheckRow>,
    /// Refinement tables, already formatted.
    pub tables: Vec<String>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed())
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:<22} {:<40} {:>13} {:>13} {:>13}  status",
            "scenario", "check", "estimate", "value", "bound", "margin"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:<22} {:<40} {:>13.5e} {:>13.5e} {:>13.5e}  {}",
                r.scenario,
                r.check,
                r.estimate,
                r.value,
                r.bound,
                r.margin,
                if r.passed() { "pass" } else { "FAIL" }
            );
        }
        for t in &self.tables {
            out.push('\n');
            out.push_str(t);
        }
        out
    }
}

type Job = Box<dyn Fn() -> Result<(Vec<CheckRow>, Option<String>)> + Send + Sync>;

/// Runs `suite` on a pool of `threads` workers. Row order does not depend
/// on the thread count.
pub fn run_suite(suite: Suite, threads: usize) -> Result<SuiteReport> {
    let jobs = match suite {
        Suite::Lemmas => lemma_jobs(),
        Suite::Metrics => vec![Box::new(metric_checks) as Job],
        Suite::Convergence => convergence_jobs(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(|j| j()).collect());
    let mut report = SuiteReport::default();
    for r in results {
        let (rows, table) = r?;
        report.rows.extend(rows);
        report.tables.extend(table);
    }
    Ok(report)
}

fn logistic_model(chi: f64, entropy: EntropySpec) -> ModelParams {
    ModelParams {
        chi,
        lambda: 1.01,
        elliptic: EllipticConfig::NeumannScreened { lambda: 1.0 },
        entropy,
        reaction: ReactionSpec::new(1.0, 1.0, 2.0).expect("valid reaction"),
    }
}

struct LemmaScenario {
    name: String,
    grid: GridSpec,
    preset: InitPreset,
    model: ModelParams,
    backend: W2Backend,
    steps: usize,
}

fn lemma_jobs() -> Vec<Job> {
    let line = GridSpec::line(1.0, 128).expect("grid");
    let square = GridSpec::rect(1.0, 1.0, 16, 16).expect("grid");
    let boltzmann = EntropySpec::boltzmann();
    let mut list = Vec::new();
    for preset in [
        InitPreset::uniform(),
        InitPreset::bump(),
        InitPreset::two_bumps(),
        InitPreset::perturbed_uniform(0.1, 1),
    ] {
        list.push(LemmaScenario {
            name: format!("{}/quantile", preset.name()),
            grid: line,
            preset,
            model: logistic_model(0.5, boltzmann),
            backend: W2Backend::Quantile1d,
            steps: 40,
        });
    }
    list.push(LemmaScenario {
        name: "perturbed_uniform/entropic".into(),
        grid: line,
        preset: InitPreset::perturbed_uniform(0.1, 1),
        model: logistic_model(0.5, boltzmann),
        backend: W2Backend::Entropic,
        steps: 40,
    });
    list.push(LemmaScenario {
        name: "bump/porous_m2".into(),
        grid: line,
        preset: InitPreset::bump(),
        model: logistic_model(0.5, EntropySpec::power(2.0).expect("m = 2").regularized_if_needed()),
        backend: W2Backend::Quantile1d,
        steps: 40,
    });
    list.push(LemmaScenario {
        name: "bump_2d/entropic".into(),
        grid: square,
        preset: InitPreset::bump(),
        model: logistic_model(0.5, boltzmann),
        backend: W2Backend::Entropic,
        steps: 10,
    });
    list.into_iter()
        .map(|s| Box::new(move || lemma_checks(&s)) as Job)
        .collect()
}

fn lemma_checks(s: &LemmaScenario) -> Result<(Vec<CheckRow>, Option<String>)> {
    let rho0 = s.preset.build(s.grid, &s.model.reaction)?;
    let mut cfg = SchemeConfig::new(s.model, s.backend, 0.01, 1.0);
    let tmax = ThresholdReport::compute(cfg.threshold_inputs(&rho0))?.tau_max();
    cfg.tau = 0.5 * tmax;
    cfg.t_final = s.steps as f64 * cfg.tau;
    cfg.enforce_thresholds = true;
    let traj = run(&rho0, &cfg)?;
    let rep = traj.report.clone().expect("enforced runs carry a report");
    Ok((lemma_rows(&s.name, &traj, &rep)?, None))
}

fn lemma_rows(name: &str, traj: &Trajectory, rep: &ThresholdReport) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let ub = check_uniform_bounds(traj, rep, 0.0);
    rows.push(CheckRow::new(
        name,
        "full-step sup",
        "rho_n <= max(eta, |rho0|)",
        ub.max_full,
        ub.full_bound * (1.0 + 1e-4),
    ));
    rows.push(CheckRow::new(
        name,
        "half-step sup",
        "rho_n+1/2 <= C1",
        ub.max_half,
        ub.half_bound * (1.0 + 1e-4),
    ));
    let l1 = check_l1_bound(traj, rep, 0.0);
    rows.push(CheckRow::new(
        name,
        "mass bound",
        "|rho_n| <= xi",
        l1.max_mass,
        l1.xi + 1e-8,
    ));
    rows.push(CheckRow::new(
        name,
        "mass recurrence",
        "one-step mass recurrence",
        l1.worst_recurrence_excess,
        1e-8 * l1.xi,
    ));
    let gap = check_two_solutions_gap(traj, rep, 0.0);
    rows.push(CheckRow::new(
        name,
        "half/full gap",
        "|rho_n+1/2 - rho_n+1| <= tau C2",
        gap.max_gap,
        gap.bound,
    ));
    let en = check_energy_gaps(traj, rep)?;
    rows.push(CheckRow::new(
        name,
        "E1 gap",
        "E1 jump <= (C3 + C4) tau",
        en.e1_gap,
        en.e1_bound,
    ));
    rows.push(CheckRow::new(
        name,
        "E2 gap",
        "E2 jump <= C5 tau",
        en.e2_gap,
        en.e2_bound,
    ));
    let h = check_holder(traj, rep, 100)?;
    rows.push(CheckRow::new(
        name,
        "WFR Hoelder",
        "WFR^2 <= C6 (t - s + tau)",
        h.max_ratio,
        h.c6,
    ));
    rows.push(CheckRow::new(
        name,
        "increment replay",
        "recorded = recomputed",
        h.increment_mismatch,
        1e-9,
    ));
    let flux = check_flux_bound(traj, rep)?;
    rows.push(CheckRow::new(
        name,
        "flux bound",
        "sum tau |grad Psi|^2 <= C9",
        flux.lhs,
        flux.c9,
    ));
    let mut prev_e1 = traj.e1_rho0;
    let (mut w2_worst, mut fr_worst) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for d in &traj.diagnostics {
        w2_worst = w2_worst.max(-(d.diss_slack_w2 + d.w2_allowance) / (1e-6 * (1.0 + prev_e1.abs())));
        fr_worst = fr_worst.max(-d.diss_slack_fr / (1e-6 * (1.0 + d.e2_half.abs())));
        prev_e1 = d.e1;
    }
    rows.push(CheckRow::new(
        name,
        "W2 dissipation",
        "(deficit - entropic bias) / 1e-6 (1 + |E1|)",
        w2_worst,
        1.0,
    ));
    rows.push(CheckRow::new(
        name,
        "FR dissipation",
        "deficit / 1e-6 (1 + |E2|)",
        fr_worst,
        1.0,
    ));
    let f = traj.model.reaction;
    let mut branch = f64::INFINITY;
    for (half, full) in traj.half_steps.iter().zip(&traj.full_steps[1..]) {
        let chk = fr_step_estimates(half, full, &f, traj.tau, rep.m_star)?;
        branch = branch.min(chk.linf.margin);
    }
    rows.push(CheckRow::new(
        name,
        "FR branch estimate",
        "sup after reaction step",
        -branch,
        1e-10,
    ));
    Ok(rows)
}

fn random_density(rng: &mut ChaCha8Rng, n: usize, mass: f64) -> DensityField {
    let v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.05..3.0)
            }
        })
        .collect();
    let total = v.iter().sum::<f64>().max(1e-3);
    let h = 1.0 / n as f64;
    let v = v.iter().map(|x| x * mass / (total * h)).collect();
    DensityField::new(GridSpec::line(1.0, n).expect("grid"), v).expect("nonnegative")
}

fn metric_checks() -> Result<(Vec<CheckRow>, Option<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut w2_tri, mut fr_tri, mut dual, mut vs_fr, mut vs_w2) = (f64::MIN, f64::MIN, 0.0f64, f64::MIN, f64::MIN);
    for _ in 0..100 {
        let (a, b, c) = (
            random_density(&mut rng, 32, 1.0),
            random_density(&mut rng, 32, 1.0),
            random_density(&mut rng, 32, 1.0),
        );
        let (ab, bc, ac) = (w2_1d(&a, &b)?, w2_1d(&b, &c)?, w2_1d(&a, &c)?);
        w2_tri = w2_tri.max(ac - ab - bc);
        let (p, q, r) = (
            random_density(&mut rng, 32, 0.5),
            random_density(&mut rng, 32, 1.0),
            random_density(&mut rng, 32, 2.0),
        );
        fr_tri = fr_tri.max(fr_distance(&p, &r)? - fr_distance(&p, &q)? - fr_distance(&q, &r)?);
        let sol = w2_1d_full(&a, &b)?;
        let phi = &sol.potential;
        let w = a.grid().cell_measure();
        let centers = a.grid().centers(0);
        // Midpoint sums of the dual objective at a refined sampling.
        let sub = 16;
        let mut lhs = 0.0;
        for (k, x0) in centers.iter().enumerate() {
            for j in 0..sub {
                let x = x0 - 0.5 * w + (j as f64 + 0.5) * w / sub as f64;
                lhs += (a.values()[k] * phi.eval(x) + b.values()[k] * phi.c_transform(x)) * w / sub as f64;
            }
        }
        dual = dual.max((lhs - sol.w2_sq).abs() / sol.w2_sq.max(1e-6));
        let ub = wfr_upper_bound(&a, &b)?;
        vs_fr = vs_fr.max(ub - fr_distance(&a, &b)?);
        vs_w2 = vs_w2.max(ub - ab);
    }
    let s = "random/100";
    Ok((
        vec![
            CheckRow::new(s, "W2 triangle", "excess of d(a,c) - d(a,b) - d(b,c)", w2_tri, 1e-8),
            CheckRow::new(s, "FR triangle", "excess of d(a,c) - d(a,b) - d(b,c)", fr_tri, 1e-12),
            CheckRow::new(s, "Kantorovich duality", "relative dual gap", dual, 1e-3),
            CheckRow::new(s, "WFR_ub <= FR", "excess", vs_fr, 1e-14),
            CheckRow::new(s, "WFR_ub <= W2", "excess (equal mass)", vs_w2, 1e-14),
        ],
        None,
    ))
}

const LEVELS: [(f64, usize); 3] = [(0.02, 64), (0.01, 128), (0.005, 256)];

fn convergence_jobs() -> Vec<Job> {
    vec![
        Box::new(|| self_refinement(0.0)) as Job,
        Box::new(|| self_refinement(0.5)) as Job,
        Box::new(el_refinement) as Job,
    ]
}

fn bump_run(chi: f64, tau: f64, n: usize, t: f64) -> Result<Trajectory> {
    let model = logistic_model(chi, EntropySpec::boltzmann());
    let rho0 = InitPreset::bump().build(GridSpec::line(1.0, n)?, &model.reaction)?;
    run(&rho0, &SchemeConfig::new(model, W2Backend::Quantile1d, tau, t))
}

/// L2 distance at `t = 0.5` to a finer run of the same scheme, and the weak
/// residual on `[0.1, 0.5]`, over the refinement levels.
fn self_refinement(chi: f64) -> Result<(Vec<CheckRow>, Option<String>)> {
    let t = 0.5;
    let reference = bump_run(chi, 0.0025, 512, t)?;
    let fine = reference.full_steps.last().expect("steps").values().to_vec();
    let name = format!("bump chi={chi}");
    let mut errs = Vec::new();
    let mut weak = vec![Vec::new(); 2];
    for (tau, n) in LEVELS {
        let traj = bump_run(chi, tau, n, t)?;
        let k = 512 / n;
        let coarse: Vec<f64> = fine.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect();
        let last = traj.full_steps.last().expect("steps");
        let sq: f64 = last.values().iter().zip(&coarse).map(|(a, b)| (a - b).powi(2)).sum();
        errs.push((sq / n as f64).sqrt());
        for (i, phi) in [TestFunction::Parabola, TestFunction::Cosine].into_iter().enumerate() {
            weak[i].push(weak_residual(&traj, phi, 0.1, t)?);
        }
    }
    let mut table = format!("{name}: refinement at t = {t} (reference tau = 0.0025, N = 512)\n");
    let _ = writeln!(
        table,
        "{:>8} {:>6} {:>13} {:>7} {:>13} {:>7} {:>13} {:>7}",
        "tau", "N", "L2 error", "order", "weak x(L-x)", "order", "weak cos", "order"
    );
    let order = |v: &[f64], i: usize| if i == 0 { f64::NAN } else { (v[i - 1] / v[i]).log2() };
    for (i, (tau, n)) in LEVELS.iter().enumerate() {
        let _ = writeln!(
            table,
            "{:>8} {:>6} {:>13.5e} {:>7.3} {:>13.5e} {:>7.3} {:>13.5e} {:>7.3}",
            tau,
            n,
            errs[i],
            order(&errs, i),
            weak[0][i],
            order(&weak[0], i),
            weak[1][i],
            order(&weak[1], i)
        );
    }
    let mut rows = Vec::new();
    for i in 1..errs.len() {
        rows.push(CheckRow::new(
            &name,
            "L2 error decreases",
            "e(finer) < e(coarser)",
            errs[i],
            errs[i - 1],
        ));
    }
    for (i, label) in ["weak order x(L-x)", "weak order cos"].into_iter().enumerate() {
        let worst = (1..3).map(|k| order(&weak[i], k)).fold(f64::INFINITY, f64::min);
        rows.push(CheckRow::new(&name, label, "1 <= order in tau", 1.0, worst));
    }
    Ok((rows, Some(table)))
}

fn el_refinement() -> Result<(Vec<CheckRow>, Option<String>)> {
    let model = logistic_model(0.5, EntropySpec::boltzmann());
    let tau = 0.01;
    let mut res = Vec::new();
    let mut comp: f64 = 0.0;
    for n in [64, 128, 256] {
        let g = InitPreset::bump().build(GridSpec::line(1.0, n)?, &model.reaction)?;
        let out = w2_step(&g, &model, &W2StepConfig::new(W2Backend::Quantile1d, tau))?;
        let rep = w2_step_el_residual(&out.rho, &g, &model, tau)?;
        comp = comp.max(rep.complementarity_defect);
        res.push((n, rep.max_residual));
    }
    let mut table = String::from("bump chi=0.5: Wasserstein step Euler-Lagrange residual (tau = 0.01)\n");
    for &(n, r) in &res {
        let _ = writeln!(table, "{n:>6} {r:>13.5e}");
    }
    let name = "bump chi=0.5";
    let mut rows: Vec<CheckRow> = res
        .windows(2)
        .map(|w| CheckRow::new(name, "EL residual decreases", "r(finer) < r(coarser)", w[1].1, w[0].1))
        .collect();
    rows.push(CheckRow::new(
        name,
        "complementarity",
        "p (M_bar - rho) / M_bar",
        comp,
        1e-8,
    ));
    Ok((rows, Some(table)))
}
