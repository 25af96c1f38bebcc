//! Single runs, the null versus non-null amplitude sweep, and refinement studies.

use crate::config::{emit_document, config_hash, Document};
use crate::error::{CliError, Result};
use crate::output::{
    ensure_dir, to_ndjson, wall_clock, write_file, write_manifest, write_run, RunManifest,
    CODE_VERSION, MANIFEST_FILE,
};
use radelastic::energies::{energy_e1, energy_identity_residual, ReportLevel};
use radelastic::radialfield::StateVector;
use radelastic::solver::{make_initial_data, run, Model, Outcome, ScenarioConfig, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Bound on `sup_t E3^{1/2} / E3^{1/2}(0)` for a run to count as bounded.
pub const ENERGY_RATIO_BOUND: f64 = 2.0;

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?)
}

/// Runs one scenario and, when `out` is given, writes its artifacts there.
pub fn run_scenario(doc: &Document, out: Option<&Path>) -> Result<(Trajectory, Option<RunManifest>)> {
    let started = wall_clock();
    let traj = run(&doc.scenario)?;
    let manifest = match out {
        Some(dir) => Some(write_run(doc, &traj, dir, started)?),
        None => None,
    };
    Ok((traj, manifest))
}

/// Completed to the final time with the energy ratio within [`ENERGY_RATIO_BOUND`].
pub fn is_bounded(traj: &Trajectory) -> bool {
    traj.outcome == Outcome::Completed && traj.energy_ratio() <= ENERGY_RATIO_BOUND
}

/// The scenario with `d1 = 0` and amplitude `eps`.
pub fn null_partner(base: &ScenarioConfig, eps: f64) -> ScenarioConfig {
    let mut c = base.clone();
    c.coeffs.d1 = 0.0;
    c.epsilon = eps;
    c.id = format!("{}-null", base.id);
    c
}

/// The scenario with `d1 = d1` and amplitude `eps`.
pub fn nonnull_partner(base: &ScenarioConfig, eps: f64, d1: f64) -> ScenarioConfig {
    let mut c = base.clone();
    c.coeffs.d1 = d1;
    c.epsilon = eps;
    c.id = format!("{}-nonnull", base.id);
    c
}

/// One bisection probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub epsilon: f64,
    pub outcome: Outcome,
    pub ratio: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    pub epsilon_small: f64,
    pub steps: Vec<BisectionStep>,
}

/// Largest amplitude in `[lo, hi]`, to relative width `tol`, whose null run is bounded.
///
/// `lo` must be bounded and `hi` must not be.
pub fn bisect_epsilon_small(base: &ScenarioConfig, lo: f64, hi: f64, tol: f64) -> Result<Bisection> {
    let probe = |eps: f64| -> Result<BisectionStep> {
        let mut c = null_partner(base, eps);
        c.output.level = ReportLevel::Energy;
        c.output.snapshots.clear();
        let t = run(&c)?;
        Ok(BisectionStep { epsilon: eps, outcome: t.outcome, ratio: t.energy_ratio(), bounded: is_bounded(&t) })
    };
    let mut steps = vec![probe(lo)?, probe(hi)?];
    if !steps[0].bounded {
        return Err(CliError::Experiment(format!(
            "null run at the lower bracket end {lo} is not bounded ({:?}, ratio {:.4})",
            steps[0].outcome, steps[0].ratio
        )));
    }
    if steps[1].bounded {
        return Err(CliError::Experiment(format!(
            "null run at the upper bracket end {hi} is still bounded (ratio {:.4}); widen the bracket",
            steps[1].ratio
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while (b - a) > tol * b {
        let m = 0.5 * (a + b);
        let s = probe(m)?;
        if s.bounded {
            a = m;
        } else {
            b = m;
        }
        steps.push(s);
    }
    Ok(Bisection { epsilon_small: a, steps })
}

/// One amplitude of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub epsilon: f64,
    pub outcome_null: Outcome,
    pub outcome_nonnull: Outcome,
    /// Blowup time of the non-null run.
    pub t_star: Option<f64>,
    /// `sup_t E3^{1/2} / E3^{1/2}(0)` of the null run.
    pub ratio_null: f64,
    pub ratio_nonnull: f64,
    /// Initial minimum of the `ψ''` coefficient of the non-null equation; nonpositive values
    /// mean the data start outside the hyperbolic regime.
    pub margin_nonnull: f64,
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::Completed => "completed".into(),
        Outcome::Blowup { t_star } => format!("blowup({t_star:.4})"),
        Outcome::BoundaryViolation { t } => format!("boundary({t:.4})"),
        Outcome::Unstable { t } => format!("unstable({t:.4})"),
    }
}

/// Text table of sweep rows.
pub fn dichotomy_table(rows: &[DichotomyRow]) -> String {
    let mut s = format!(
        "{:>12} {:>18} {:>18} {:>10} {:>10} {:>10} {:>10}\n",
        "epsilon", "null", "nonnull", "t*", "ratio0", "ratio1", "margin1"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>12.6} {:>18} {:>18} {:>10} {:>10.4} {:>10.4} {:>10.4}",
            r.epsilon,
            outcome_text(&r.outcome_null),
            outcome_text(&r.outcome_nonnull),
            r.t_star.map_or("-".into(), |t| format!("{t:.4}")),
            r.ratio_null,
            r.ratio_nonnull,
            r.margin_nonnull
        );
    }
    s
}

fn sub_document(doc: &Document, scenario: ScenarioConfig) -> Document {
    Document { scenario, ..doc.clone() }
}

/// Paired null and non-null runs at each amplitude, up to `workers` at a time. With `out`,
/// each run writes its own directory below it.
pub fn run_dichotomy(
    base: &Document,
    amplitudes: &[f64],
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<DichotomyRow>> {
    if amplitudes.iter().any(|a| !(*a >= 0.0)) || amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Experiment("amplitudes must be nonnegative and strictly ascending".into()));
    }
    let d1 = base.dichotomy.nonnull_d1;
    let tasks: Vec<(usize, bool)> = (0..amplitudes.len()).flat_map(|i| [(i, false), (i, true)]).collect();
    let trajs: Vec<Trajectory> = pool(workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, nonnull)| {
                let eps = amplitudes[i];
                let cfg = if nonnull {
                    nonnull_partner(&base.scenario, eps, d1)
                } else {
                    null_partner(&base.scenario, eps)
                };
                let doc = sub_document(base, cfg);
                let dir = out.map(|o| o.join(format!("eps{i:02}_{}", if nonnull { "nonnull" } else { "null" })));
                run_scenario(&doc, dir.as_deref()).map(|(t, _)| t)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(amplitudes.len());
    for (i, &eps) in amplitudes.iter().enumerate() {
        let (tn, tb) = (&trajs[2 * i], &trajs[2 * i + 1]);
        let init = make_initial_data(&tb.config.family, eps, tb.config.grid)?;
        let model = Model::new(tb.config.coeffs);
        rows.push(DichotomyRow {
            epsilon: eps,
            outcome_null: tn.outcome,
            outcome_nonnull: tb.outcome,
            t_star: match tb.outcome {
                Outcome::Blowup { t_star } => Some(t_star),
                _ => None,
            },
            ratio_null: tn.energy_ratio(),
            ratio_nonnull: tb.energy_ratio(),
            margin_nonnull: model.principal_margin(&tb.config.grid, init.psi.values())?,
        });
    }
    Ok(rows)
}

/// Result of the full dichotomy experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub bisection: Option<Bisection>,
    pub rows: Vec<DichotomyRow>,
}

impl DichotomyReport {
    pub fn epsilon_small(&self) -> Option<f64> {
        self.bisection.as_ref().map(|b| b.epsilon_small)
    }
}

/// Bisection (when a bracket is configured) followed by the paired sweep over the explicit
/// amplitudes, the bisected amplitude and its configured multiples.
pub fn run_dichotomy_experiment(doc: &Document, workers: usize, out: Option<&Path>) -> Result<DichotomyReport> {
    let started = wall_clock();
    let spec = &doc.dichotomy;
    let bisection = match spec.bracket {
        Some([lo, hi]) => Some(bisect_epsilon_small(&doc.scenario, lo, hi, spec.tolerance)?),
        None => None,
    };
    let mut amps = spec.amplitudes.clone();
    if let Some(b) = &bisection {
        amps.push(b.epsilon_small);
        amps.extend(spec.multiples.iter().map(|m| m * b.epsilon_small));
    }
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    if amps.is_empty() {
        return Err(CliError::Experiment("no amplitudes: set dichotomy.amplitudes or dichotomy.bracket".into()));
    }
    let rows = run_dichotomy(doc, &amps, workers, out)?;
    let report = DichotomyReport { bisection, rows };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut artifacts = vec!["summary.ndjson".to_string(), "summary.txt".to_string()];
        write_file(dir, "summary.ndjson", &to_ndjson(&report.rows)?)?;
        write_file(dir, "summary.txt", &dichotomy_table(&report.rows))?;
        if let Some(b) = &report.bisection {
            write_file(dir, "bisection.ndjson", &to_ndjson(&b.steps)?)?;
            artifacts.push("bisection.ndjson".into());
        }
        for i in 0..amps.len() {
            for side in ["null", "nonnull"] {
                artifacts.push(format!("eps{i:02}_{side}/{MANIFEST_FILE}"));
            }
        }
        artifacts.push(MANIFEST_FILE.into());
        let m = RunManifest {
            id: doc.scenario.id.clone(),
            kind: "dichotomy".into(),
            config: emit_document(doc),
            config_sha256: config_hash(doc),
            code_version: CODE_VERSION.into(),
            started,
            finished: wall_clock(),
            outcome: None,
            grid: None,
            epsilon_small: report.epsilon_small(),
            artifacts,
        };
        write_manifest(dir, &m)?;
    }
    Ok(report)
}

/// Measurements at one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    /// `|E1(T) − E1(0)| / E1(0)`.
    pub e1_drift: f64,
    /// `max |ψ_h − R ψ_{h/2}|` at the final time against the next finer level.
    pub sup_diff: Option<f64>,
    /// `max_t |identity residual| / max_t E3`.
    pub identity_residual: f64,
}

/// Observed orders between consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderTable {
    pub levels: Vec<LevelRow>,
    pub sup_orders: Vec<f64>,
    pub drift_orders: Vec<f64>,
    pub identity_orders: Vec<f64>,
}

impl OrderTable {
    pub fn min_sup_order(&self) -> f64 {
        self.sup_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>8} {:>10} {:>10} {:>12} {:>12} {:>12}\n",
            "cells", "h", "dt", "sup_diff", "e1_drift", "identity"
        );
        for l in &self.levels {
            let _ = writeln!(
                s,
                "{:>8} {:>10.5} {:>10.5} {:>12} {:>12.4e} {:>12.4e}",
                l.cells,
                l.h,
                l.dt,
                l.sup_diff.map_or("-".into(), |d| format!("{d:.4e}")),
                l.e1_drift,
                l.identity_residual
            );
        }
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "order sup-norm: {}", fmt(&self.sup_orders));
        let _ = writeln!(s, "order E1 drift: {}", fmt(&self.drift_orders));
        let _ = writeln!(s, "order identity residual: {}", fmt(&self.identity_orders));
        s
    }
}

/// `log2(a/b)` for consecutive entries.
pub fn observed_orders(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Restricts a profile on `2n` cells to the `n`-cell grid with sixth-order midpoint
/// interpolation; `ψ` is even in `r` and zero beyond the outer radius.
pub fn restrict(fine: &[f64]) -> Vec<f64> {
    const W: [f64; 6] = [3.0, -25.0, 150.0, 150.0, -25.0, 3.0];
    let nf = fine.len() as isize;
    let at = |i: isize| -> f64 {
        if i < 0 {
            fine[(-1 - i) as usize]
        } else if i >= nf {
            0.0
        } else {
            fine[i as usize]
        }
    };
    (0..fine.len() / 2)
        .map(|j| {
            let c = 2 * j as isize;
            (0..6).map(|k| W[k] * at(c - 2 + k as isize)).sum::<f64>() / 256.0
        })
        .collect()
}

/// Runs `levels` simultaneous halvings of `h`, `dt` and the output cadence and reports the
/// observed orders of the final-time solution, the `E1` drift and the identity residual.
pub fn run_convergence(base: &ScenarioConfig, levels: usize, workers: usize) -> Result<OrderTable> {
    if levels < 3 {
        return Err(CliError::TooFewLevels(levels));
    }
    let cfgs: Vec<ScenarioConfig> = (0..levels)
        .map(|k| {
            let mut c = base.clone();
            c.grid = base.grid.refined(1 << k);
            c.output.cadence = base.output.cadence / (1 << k) as f64;
            c.output.level = ReportLevel::Energy;
            c.output.store_states = true;
            c.output.snapshots.clear();
            c.id = format!("{}-level{k}", base.id);
            c
        })
        .collect();
    let window = identity_window(base);
    let results: Vec<(Trajectory, f64, f64)> = pool(workers)?.install(|| {
        cfgs.par_iter()
            .map(|c| -> Result<(Trajectory, f64, f64)> {
                let t = run(c)?;
                if t.outcome != Outcome::Completed {
                    return Err(CliError::Experiment(format!(
                        "level with {} cells did not complete: {:?}",
                        c.grid.cells(),
                        t.outcome
                    )));
                }
                let drift = e1_drift(&t.states)?;
                let res = identity_residual(&t.states, &Model::new(c.coeffs), window)?;
                Ok((t, drift, res))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(levels);
    for (k, (t, drift, res)) in results.iter().enumerate() {
        let sup_diff = results.get(k + 1).map(|(tf, _, _)| {
            let coarse = t.states.last().expect("a completed run stores its final state").psi.values();
            let fine = restrict(tf.states.last().expect("a completed run stores its final state").psi.values());
            coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        });
        rows.push(LevelRow {
            cells: t.config.grid.cells(),
            h: t.config.grid.h(),
            dt: t.dt,
            e1_drift: *drift,
            sup_diff,
            identity_residual: *res,
        });
    }
    let sup: Vec<f64> = rows.iter().filter_map(|r| r.sup_diff).collect();
    Ok(OrderTable {
        sup_orders: observed_orders(&sup),
        drift_orders: observed_orders(&rows.iter().map(|r| r.e1_drift).collect::<Vec<_>>()),
        identity_orders: observed_orders(&rows.iter().map(|r| r.identity_residual).collect::<Vec<_>>()),
        levels: rows,
    })
}

/// `|E1(last) − E1(first)| / E1(first)`, 0 for zero energy.
pub fn e1_drift(states: &[StateVector]) -> Result<f64> {
    let (Some(a), Some(b)) = (states.first(), states.last()) else {
        return Ok(0.0);
    };
    let e0 = energy_e1(a)?;
    Ok(if e0 > 0.0 { (energy_e1(b)? - e0).abs() / e0 } else { 0.0 })
}

/// Times at which the five-point derivative of `base`'s samples exists: two samples in from
/// either end.
pub fn identity_window(base: &ScenarioConfig) -> (f64, f64) {
    let last = base.output_count() as f64 * base.output.cadence;
    (2.0 * base.output.cadence, last - 2.0 * base.output.cadence)
}

/// `max_t |residual| / max_t E3` of the energy identity over a stored segment, taken over
/// sample times in `[lo, hi]`. Refinement studies pass the sampled window of the coarsest
/// level so every level is measured over the same times.
pub fn identity_residual(states: &[StateVector], model: &Model, (lo, hi): (f64, f64)) -> Result<f64> {
    let samples = energy_identity_residual(states, model)?;
    let window = samples.iter().filter(|s| s.t >= lo - 1e-9 && s.t <= hi + 1e-9);
    let e = window.clone().map(|s| s.e3).fold(0.0, f64::max);
    let r = window.map(|s| s.residual.abs()).fold(0.0, f64::max);
    Ok(if e > 0.0 { r / e } else { r })
}
