//! Verification suites: null structure, weighted inequalities, the perturbed space-time
//! estimate, multiplier identities and energy properties of small-data runs.
//!
//! Every suite is deterministic given the seed, and every check yields one row with a verdict.

use crate::error::{CliError, Result};
use crate::experiments::observed_orders;
use crate::output::{ensure_dir, to_ndjson, write_file};
use radelastic::energies::{ks_constant, kss_growth_exponent, ReportLevel};
use radelastic::nullform::{
    build_tensor, evaluate_n, evaluate_trilinear, max_null_contraction, radial_angular_terms,
    random_grad, random_jet, random_point, CoefficientSet, Grad, NullFormTensor, VectorJet2,
};
use radelastic::radialfield::{RadialGrid, RadialProfile, StateVector};
use radelastic::solver::{radiality_defect, run, run_from, DataFamily, Model, Outcome, ScenarioConfig};
use radelastic::verify::{
    kss_inequality_check, member_label, multiplier_constant, multiplier_identity_residual,
    perturbed_multiplier_residual, sobolev_family, sobolev_ratio, Inequality, ManufacturedField,
    MultiplierSpec, PerturbationTensor, Verdict, VerificationRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Tolerance on the null contraction relative to `max|g|`.
pub const NULL_TOL: f64 = 1e-12;
/// Relative closure of the radial/angular decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-10;
/// Relative agreement with the index-loop oracle.
pub const ORACLE_TOL: f64 = 1e-12;
/// Allowed relative change of an inequality ratio under one grid doubling.
pub const STABILITY_TOL: f64 = 0.1;
/// Bound on normalized identity residuals at the reference resolution.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Minimum observed order of identity residuals.
pub const MIN_RESIDUAL_ORDER: f64 = 2.0;
/// Largest allowed spread `max/min` of empirical constants.
pub const SPREAD_TOL: f64 = 2.0;
/// Relative `E1` drift bound for linear runs.
pub const DRIFT_TOL: f64 = 1e-6;
/// Off-axis radiality tolerance.
pub const RADIALITY_TOL: f64 = 1e-10;
/// Bound on the growth exponent of the normalized space-time integral.
pub const KSS_EXPONENT_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Nullform,
    Sobolev,
    Kss,
    Multiplier,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Self::Nullform, Self::Sobolev, Self::Kss, Self::Multiplier, Self::Energy];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Nullform => "nullform",
            Self::Sobolev => "sobolev",
            Self::Kss => "kss",
            Self::Multiplier => "multiplier",
            Self::Energy => "energy",
        }
    }

    /// Comma-separated names; empty or `all` selects every suite.
    pub fn parse_selector(sel: &str) -> Result<Vec<Suite>> {
        let sel = sel.trim();
        if sel.is_empty() || sel == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in sel.split(',').map(str::trim) {
            let s = Self::ALL
                .iter()
                .find(|s| s.name() == name)
                .copied()
                .ok_or_else(|| CliError::UnknownSuite(name.to_string()))?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// Knobs shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Smallness bound on `|h|`.
    pub h_bound: f64,
    pub workers: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, h_bound: radelastic::verify::DEFAULT_H_BOUND, workers: 1 }
    }
}

/// Rows of all executed checks plus any energy streams produced on the way.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    /// `(file name, NDJSON text)` of energy streams from suite runs.
    pub streams: Vec<(String, String)>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> Vec<&VerificationRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail).collect()
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<28} {:<36} {:>14} {:<16} {}\n", "check", "member", "value", "grid", "verdict");
        for r in &self.rows {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    /// Writes the row stream, the table and the energy streams into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        ensure_dir(dir)?;
        write_file(dir, "verification.ndjson", &to_ndjson(&self.rows)?)?;
        write_file(dir, "verification.txt", &self.to_table())?;
        let mut files = vec!["verification.ndjson".to_string(), "verification.txt".to_string()];
        for (name, text) in &self.streams {
            write_file(dir, name, text)?;
            files.push(name.clone());
        }
        Ok(files)
    }
}

fn row(check: &str, member: impl Into<String>, value: f64, grid: impl Into<String>, ok: bool) -> VerificationRow {
    VerificationRow {
        check: check.to_string(),
        member: member.into(),
        value,
        grid: grid.into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Executes the selected suites, up to `workers` at a time, in a fixed row order.
pub fn run_verification(selector: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    let suites = Suite::parse_selector(selector)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build()?;
    let parts: Vec<VerificationReport> = pool.install(|| {
        suites
            .par_iter()
            .map(|s| match s {
                Suite::Nullform => nullform_suite(opts),
                Suite::Sobolev => sobolev_suite(),
                Suite::Kss => kss_suite(opts),
                Suite::Multiplier => multiplier_suite(opts),
                Suite::Energy => energy_suite(),
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = VerificationReport::default();
    for p in parts {
        out.rows.extend(p.rows);
        out.streams.extend(p.streams);
    }
    Ok(out)
}

fn coeff_label(c: &CoefficientSet) -> String {
    format!("d=({:.3},{:.3},{:.3},{:.3},{:.3})", c.d1, c.d2, c.d3, c.d4, c.d5)
}

/// `N` by the plain six-fold index loop, with the sum of absolute terms per component.
fn naive_n(t: &NullFormTensor, u: &VectorJet2, v: &VectorJet2) -> ([f64; 3], [f64; 3]) {
    let mut out = [0.0; 3];
    let mut mag = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        for n in 0..3 {
                            let g = t.get(i, j, k, l, m, n);
                            let a = g * u.ddu[l + 1][m + 1][j] * v.du[n + 1][k];
                            let b = g * u.du[m + 1][j] * v.ddu[l + 1][n + 1][k];
                            out[i] += a + b;
                            mag[i] += a.abs() + b.abs();
                        }
                    }
                }
            }
        }
    }
    (out, mag)
}

fn naive_trilinear(t: &NullFormTensor, a: &Grad, b: &Grad, c: &Grad) -> (f64, f64) {
    let (mut s, mut m) = (0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for mm in 0..3 {
                        for n in 0..3 {
                            let v = t.get(i, j, k, l, mm, n) * a[l][i] * b[mm][j] * c[n][k];
                            s += v;
                            m += v.abs();
                        }
                    }
                }
            }
        }
    }
    (s, m)
}

fn nullform_suite(opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sets = vec![
        CoefficientSet::reduced(0.0, 1.0, 1.0),
        CoefficientSet::reduced(0.0, 1.0, 0.0),
        CoefficientSet::reduced(0.0, 0.0, 1.0),
    ];
    for _ in 0..3 {
        let d: [f64; 5] = [0.0, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        sets.push(CoefficientSet::new(1.0, 0.5, d)?);
    }
    let mut rows = Vec::new();
    for c in &sets {
        let t = build_tensor(c);
        let label = coeff_label(c);
        let scale = t.max_abs();
        let contraction = if scale > 0.0 { max_null_contraction(&t, 10_000) / scale } else { 0.0 };
        rows.push(row("nullform/contraction", &label, contraction, "fib10000", contraction <= NULL_TOL));
        let sym = t.symmetry_defect();
        rows.push(row("nullform/symmetry", &label, sym, "exact", sym == 0.0));
        let (mut dec, mut on, mut ot) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..1000 {
            let (a, b, cc) = (random_grad(&mut rng), random_grad(&mut rng), random_grad(&mut rng));
            let x = random_point(&mut rng, 0.1, 10.0);
            let parts = radial_angular_terms(&t, &a, &b, &cc, &x)?;
            let whole = evaluate_trilinear(&t, &a, &b, &cc);
            let mag: f64 = parts.iter().map(|p| p.abs()).sum::<f64>().max(whole.abs());
            if mag > 0.0 {
                dec = dec.max((parts.iter().sum::<f64>() - whole).abs() / mag);
            }
            let (nt, mt) = naive_trilinear(&t, &a, &b, &cc);
            if mt > 0.0 {
                ot = ot.max((nt - whole).abs() / mt);
            }
            let (u, v) = (random_jet(&mut rng), random_jet(&mut rng));
            let fast = evaluate_n(&t, &u, &v);
            let (slow, m) = naive_n(&t, &u, &v);
            for i in 0..3 {
                if m[i] > 0.0 {
                    on = on.max((fast[i] - slow[i]).abs() / m[i]);
                }
            }
        }
        rows.push(row("nullform/decomposition", &label, dec, "1000 jets", dec <= DECOMPOSITION_TOL));
        rows.push(row("nullform/oracle_n", &label, on, "1000 jets", on <= ORACLE_TOL));
        rows.push(row("nullform/oracle_trilinear", &label, ot, "1000 jets", ot <= ORACLE_TOL));
    }
    // Control: the non-null coefficient must be detected.
    let c = CoefficientSet::reduced(1.0, 1.0, 1.0);
    let t = build_tensor(&c);
    let ratio = max_null_contraction(&t, 10_000) / t.max_abs();
    rows.push(row("nullform/nonnull_control", coeff_label(&c), ratio, "fib10000", ratio > 1e-3));
    Ok(VerificationReport { rows, streams: Vec::new() })
}

/// Radius and cell counts of the inequality suite.
pub const SOBOLEV_GRID: (f64, usize) = (12.0, 400);

fn sobolev_suite() -> Result<VerificationReport> {
    let (radius, n) = SOBOLEV_GRID;
    let coarse = RadialGrid::new(radius, n)?;
    let fine = coarse.refined(2);
    let mut rows = Vec::new();
    for f in sobolev_family() {
        let pc = RadialProfile::from_fn(coarse, |r| f.shape(r));
        let pf = RadialProfile::from_fn(fine, |r| f.shape(r));
        for ineq in Inequality::ALL {
            let a = sobolev_ratio(&pc, ineq, 0.0)?;
            let b = sobolev_ratio(&pf, ineq, 0.0)?;
            let stable = if a == 0.0 && b == 0.0 { true } else { ((b / a) - 1.0).abs() <= STABILITY_TOL };
            let ok = a.is_finite() && b.is_finite() && stable;
            rows.push(row(
                &format!("sobolev/{}", ineq.name()),
                member_label(&f),
                b,
                format!("R={radius} n={n}/{}", 2 * n),
                ok,
            ));
        }
    }
    Ok(VerificationReport { rows, streams: Vec::new() })
}

fn kss_suite(opts: &VerifyOptions) -> Result<VerificationReport> {
    let fields = [
        (ManufacturedField::ModulatedGaussian { width: 1.0, freq: 1.0 }, "modulated_gaussian", 2.0),
        (ManufacturedField::OutgoingPulse { center: 5.0, width: 1.0 }, "outgoing_pulse", 8.0),
    ];
    let (radius, n, t, steps) = (30.0, 200usize, 10.0, 40usize);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut finite = true;
    for (u, name, width) in fields {
        for perturbed in [false, true] {
            let ratio_at = |cells: usize| -> Result<f64> {
                let g = RadialGrid::new(radius, cells)?;
                let h = if perturbed {
                    PerturbationTensor::random(g, opts.seed, 0.5 * opts.h_bound, width)?
                } else {
                    PerturbationTensor::zeros(g)
                };
                Ok(kss_inequality_check(&u, &h, opts.h_bound, t, steps)?.ratio())
            };
            let (a, b) = (ratio_at(n)?, ratio_at(2 * n)?);
            finite &= a.is_finite() && b.is_finite();
            worst = worst.max(a).max(b);
            let ok = a.is_finite() && b > 0.0 && ((b / a) - 1.0).abs() <= STABILITY_TOL;
            let member = format!("{name}/{}", if perturbed { "random_h" } else { "h=0" });
            rows.push(row("kss/ratio", member, b, format!("R={radius} n={n}/{}", 2 * n), ok));
        }
    }
    rows.push(row("kss/constant", "all", worst, format!("T={t}"), finite && worst > 0.0));
    // Perturbations above the smallness bound must be rejected.
    let g = RadialGrid::new(radius, n)?;
    let big = PerturbationTensor::random(g, opts.seed, 2.0 * opts.h_bound, 2.0)?;
    let rejected = kss_inequality_check(&fields[0].0, &big, opts.h_bound, t, steps).is_err();
    rows.push(row("kss/smallness_guard", "|h|=2 bound", big.magnitude(), "", rejected));
    Ok(VerificationReport { rows, streams: Vec::new() })
}

/// Sampled exact outgoing wave used for the multiplier identities.
pub const MULTIPLIER_PULSE: ManufacturedField = ManufacturedField::OutgoingPulse { center: 5.0, width: 1.0 };

/// Segment of nine sampled states of the outgoing pulse around `t = 3.1` at `cells` cells.
pub fn pulse_segment(cells: usize, cadence: f64) -> Result<Vec<StateVector>> {
    let g = RadialGrid::new(10.0, cells)?;
    (0..9).map(|k| Ok(MULTIPLIER_PULSE.state(g, 2.9 + k as f64 * cadence)?)).collect()
}

/// Largest normalized residuals `(unperturbed, perturbed)` at the three refinement levels
/// `(200, 0.04)`, `(400, 0.02)`, `(800, 0.01)`.
pub fn multiplier_residuals(spec: &MultiplierSpec, seed: u64, h_amp: f64) -> Result<Vec<(f64, f64)>> {
    let model = Model::linear();
    [(200usize, 0.04), (400, 0.02), (800, 0.01)]
        .iter()
        .map(|&(n, cad)| {
            let seg = pulse_segment(n, cad)?;
            let plain = multiplier_identity_residual(&seg, spec, &model)?
                .iter()
                .map(|s| s.residual)
                .fold(0.0, f64::max);
            let h = PerturbationTensor::random(*seg[0].grid(), seed, h_amp, 8.0)?;
            Ok((plain, perturbed_multiplier_residual(&seg, &h, spec)?))
        })
        .collect()
}

/// Empirical multiplier constants on a linear Gaussian run to `T = 150` (`R = 170`,
/// 1700 cells, cadence 0.5), in the order of `specs`.
pub fn multiplier_constants(specs: &[MultiplierSpec]) -> Result<Vec<f64>> {
    let g = RadialGrid::new(170.0, 1700)?;
    let mut cfg = ScenarioConfig::new(g, 150.0, CoefficientSet::reduced(0.0, 0.0, 0.0), DataFamily::Gaussian { width: 1.0 }, 1.0);
    cfg.output.cadence = 0.5;
    cfg.output.level = ReportLevel::Energy;
    cfg.output.store_states = true;
    let t = run(&cfg)?;
    if t.outcome != Outcome::Completed {
        return Err(CliError::Experiment(format!("constant run ended with {:?}", t.outcome)));
    }
    specs.iter().map(|s| Ok(multiplier_constant(&t.states, s)?)).collect()
}

fn multiplier_suite(opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut rows = Vec::new();
    for spec in [MultiplierSpec::Sqrt, MultiplierSpec::Rho { rho: 4.0 }] {
        let res = multiplier_residuals(&spec, opts.seed, 0.5 * opts.h_bound)?;
        for (k, check) in ["multiplier/identity", "multiplier/perturbed"].iter().enumerate() {
            let v: Vec<f64> = res.iter().map(|p| if k == 0 { p.0 } else { p.1 }).collect();
            let orders = observed_orders(&v);
            let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
            let last = *v.last().expect("three levels");
            rows.push(row(
                check,
                spec.label(),
                last,
                "n=200/400/800",
                last <= RESIDUAL_TOL && min_order >= MIN_RESIDUAL_ORDER,
            ));
            rows.push(row(&format!("{check}_order"), spec.label(), min_order, "n=200/400/800", min_order >= MIN_RESIDUAL_ORDER));
        }
    }
    let specs: Vec<MultiplierSpec> = [1.0, 4.0, 16.0, 64.0].iter().map(|&rho| MultiplierSpec::Rho { rho }).collect();
    let cs = multiplier_constants(&specs)?;
    for (s, c) in specs.iter().zip(&cs) {
        rows.push(row("multiplier/constant", s.label(), *c, "n=1700 T=150", c.is_finite() && *c > 0.0));
    }
    let spread = cs.iter().copied().fold(0.0, f64::max) / cs.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push(row("multiplier/rho_spread", "rho=1,4,16,64", spread, "n=1700 T=150", spread < SPREAD_TOL));
    Ok(VerificationReport { rows, streams: Vec::new() })
}

/// Null `(2d3+d4, d5) = (1, 1)` small-data scenario with the `bump(1,4)` profile.
pub fn small_data_config(radius: f64, cells: usize, t_final: f64, eps: f64) -> Result<ScenarioConfig> {
    let g = RadialGrid::new(radius, cells)?;
    let mut c = ScenarioConfig::new(
        g,
        t_final,
        CoefficientSet::reduced(0.0, 1.0, 1.0),
        DataFamily::Bump { plateau: 1.0, support: 4.0 },
        eps,
    );
    c.id = format!("small-n{cells}-T{t_final}");
    Ok(c)
}

/// Exact outgoing linear wave `φ = A(r−t)/r`, `A(s) = e^{−(s−10)²}`, sampled at `t = 0`.
pub fn outgoing_wave_data(grid: RadialGrid) -> Result<StateVector> {
    Ok(ManufacturedField::OutgoingPulse { center: 10.0, width: 1.0 }.state(grid, 0.0)?)
}

/// `(cells, sampling interval)` of the identity refinement on `R = 7`, `T = 1`.
pub const IDENTITY_LEVELS: [(usize, f64); 3] = [(800, 0.05), (1600, 0.025), (3200, 0.0125)];

fn energy_suite() -> Result<VerificationReport> {
    let mut rows = Vec::new();
    let mut streams = Vec::new();

    // Equivalence, radiality and the Klainerman–Sideris constant at two resolutions.
    let mut constants = Vec::new();
    for cells in [1200usize, 2400] {
        let mut cfg = small_data_config(30.0, cells, 20.0, 1.0)?;
        cfg.output.cadence = 0.5;
        cfg.output.store_states = true;
        let t = run(&cfg)?;
        streams.push((format!("energy_small_n{cells}.ndjson"), to_ndjson(&t.reports)?));
        let grid = format!("R=30 n={cells}");
        let small = t.snapshots_detail.iter().filter(|s| s.sup_du <= cfg.thresholds.smallness);
        let bad = small.clone().filter(|s| !s.equivalence_holds()).count();
        let checked = small.count();
        rows.push(row(
            "energy/equivalence",
            format!("{checked} small times"),
            bad as f64,
            grid.clone(),
            t.outcome == Outcome::Completed && bad == 0 && checked == t.snapshots_detail.len(),
        ));
        let model = Model::new(cfg.coeffs);
        let mut rad = 0.0f64;
        for s in &t.states {
            rad = rad.max(radiality_defect(s, &model)?);
        }
        rows.push(row("energy/radiality", "bump(1,4) eps=1", rad, grid.clone(), rad <= RADIALITY_TOL));
        let c = ks_constant(&t.snapshots_detail);
        rows.push(row("energy/ks_constant", "bump(1,4) eps=1", c, grid, c.is_finite() && c > 0.0));
        constants.push(c);
    }
    let spread = constants[0].max(constants[1]) / constants[0].min(constants[1]);
    rows.push(row("energy/ks_constant_spread", "n=1200/2400", spread, "R=30", spread < SPREAD_TOL));

    // Identity residual under joint refinement of h and the sampling interval.
    let mut res = Vec::new();
    let mut window = None;
    for (cells, cad) in IDENTITY_LEVELS {
        let mut cfg = small_data_config(7.0, cells, 1.0, 1.0)?;
        cfg.output.cadence = cad;
        cfg.output.level = ReportLevel::Energy;
        cfg.output.store_states = true;
        cfg.thresholds.boundary_tol = 1.0;
        let window = *window.get_or_insert_with(|| crate::experiments::identity_window(&cfg));
        let t = run(&cfg)?;
        res.push(crate::experiments::identity_residual(&t.states, &Model::new(cfg.coeffs), window)?);
    }
    let orders = observed_orders(&res);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let last = *res.last().expect("three levels");
    rows.push(row("energy/identity_residual", "bump(1,4) eps=1", last, "n=3200 T=1", last <= RESIDUAL_TOL));
    rows.push(row("energy/identity_order", "bump(1,4) eps=1", min_order, "n=800/1600/3200", min_order >= MIN_RESIDUAL_ORDER));

    // Linear energy drift of the exact outgoing wave.
    let g = RadialGrid::new(40.0, 2048)?;
    let mut cfg = ScenarioConfig::new(g, 20.0, CoefficientSet::reduced(0.0, 0.0, 0.0), DataFamily::Gaussian { width: 1.0 }, 0.0);
    cfg.output.level = ReportLevel::Energy;
    cfg.output.store_states = true;
    let t = run_from(&cfg, &Model::linear(), outgoing_wave_data(g)?)?;
    let drift = crate::experiments::e1_drift(&t.states)?;
    rows.push(row("energy/linear_e1_drift", "outgoing wave", drift, "R=40 n=2048", drift <= DRIFT_TOL));

    // Growth of the space-time integral on the long small-data run.
    let mut cfg = small_data_config(120.0, 2400, 100.0, 1.0)?;
    cfg.output.cadence = 1.0;
    let t = run(&cfg)?;
    streams.push(("energy_long_n2400.ndjson".into(), to_ndjson(&t.reports)?));
    let p = kss_growth_exponent(&t.reports, 1.0, 100.0).unwrap_or(f64::NAN);
    rows.push(row(
        "energy/kss_exponent",
        "bump(1,4) eps=1",
        p,
        "R=120 n=2400",
        t.outcome == Outcome::Completed && p <= KSS_EXPONENT_TOL,
    ));
    Ok(VerificationReport { rows, streams })
}
