//! Method-of-lines solver for the radial equation
//! `ψ̈ = ψ'' + 4ψ'/r + χ`, where `x χ = N(u,u)` for `u = x ψ`.
//!
//! `χ` is obtained by evaluating the vector nonlinearity on the axis `x = r e_1` and dividing
//! its first component by `r`. On radial jets the result is a fixed bilinear expression in
//! `(ψ, rψ')` and `(ψ', rψ'')`, whose four coefficients are read off the tensor once.

use crate::energies::{EnergyEvaluator, EnergyReport, ReportLevel, RunningIntegrals, Snapshot};
use crate::error::{Error, Result};
use crate::nullform::{build_tensor, evaluate_n, CoefficientSet, NullFormTensor, VectorJet2};
use crate::radialfield::{
    derivative_stack, lift_radial, lift_to_jet, OuterClosure, RadialGrid, RadialProfile,
    StateVector,
};
use serde::{Deserialize, Serialize};

/// Tensor plus its radial reduction.
#[derive(Debug, Clone)]
pub struct Model {
    pub coeffs: CoefficientSet,
    pub tensor: NullFormTensor,
    reduction: [f64; 4],
}

/// Jet with spatial gradient `A` and spatial Hessian block `B`; time slots zero.
fn synthetic_jet(a: &[[f64; 3]; 3], b: &[[[f64; 3]; 3]; 3]) -> VectorJet2 {
    let mut j = VectorJet2::default();
    for l in 0..3 {
        j.du[l + 1] = a[l];
        for m in 0..3 {
            j.ddu[l + 1][m + 1] = b[l][m];
        }
    }
    j
}

fn kd(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Coefficients `c` with `χ = c0 ψψ'/r + c1 ψ'² + c2 ψψ'' + c3 rψ'ψ''`.
///
/// On the axis `∇u = ψ A0 + rψ' A1` and `∇∇u = ψ' B0 + rψ'' B1`, so the first component of
/// `N(u,u)` is bilinear in those four scalars.
fn radial_reduction(t: &NullFormTensor) -> [f64; 4] {
    let mut a0 = [[0.0; 3]; 3];
    let mut a1 = [[0.0; 3]; 3];
    let mut b0 = [[[0.0; 3]; 3]; 3];
    let mut b1 = [[[0.0; 3]; 3]; 3];
    for l in 0..3 {
        a0[l][l] = 1.0;
        for m in 0..3 {
            for p in 0..3 {
                b0[l][m][p] = kd(m, p) * kd(l, 0)
                    + kd(l, p) * kd(m, 0)
                    + kd(p, 0) * (kd(l, m) - kd(l, 0) * kd(m, 0));
            }
        }
    }
    a1[0][0] = 1.0;
    b1[0][0][0] = 1.0;
    let n1 = |a: &[[f64; 3]; 3], b: &[[[f64; 3]; 3]; 3]| {
        let j = synthetic_jet(a, b);
        evaluate_n(t, &j, &j)[0]
    };
    [n1(&a0, &b0), n1(&a1, &b0), n1(&a0, &b1), n1(&a1, &b1)]
}

impl Model {
    pub fn new(coeffs: CoefficientSet) -> Self {
        let tensor = build_tensor(&coeffs);
        Self::from_tensor(coeffs, tensor)
    }

    pub fn from_tensor(coeffs: CoefficientSet, tensor: NullFormTensor) -> Self {
        let reduction = radial_reduction(&tensor);
        Self { coeffs, tensor, reduction }
    }

    pub fn linear() -> Self {
        Self::new(CoefficientSet::reduced(0.0, 0.0, 0.0))
    }

    pub fn reduction(&self) -> [f64; 4] {
        self.reduction
    }

    pub fn is_linear(&self) -> bool {
        self.tensor.nonzeros().is_empty()
    }

    /// `χ` at radius `r` from `(ψ, ψ', ψ'')`.
    #[inline]
    pub fn chi(&self, r: f64, p0: f64, p1: f64, p2: f64) -> f64 {
        let c = &self.reduction;
        c[0] * p0 * p1 / r + c[1] * p1 * p1 + c[2] * p0 * p2 + c[3] * r * p1 * p2
    }

    /// Time derivative of `χ` given `(ψ, ψ', ψ'')` and `(ψ̇, ψ̇', ψ̇'')`.
    #[inline]
    pub fn chi_dot(&self, r: f64, p: [f64; 3], q: [f64; 3]) -> f64 {
        let c = &self.reduction;
        c[0] * (q[0] * p[1] + p[0] * q[1]) / r
            + 2.0 * c[1] * p[1] * q[1]
            + c[2] * (q[0] * p[2] + p[0] * q[2])
            + c[3] * r * (q[1] * p[2] + p[1] * q[2])
    }

    /// `χ` profile from a derivative stack `[ψ, ψ', ψ'', ...]`.
    pub fn chi_profile(&self, grid: &RadialGrid, stack: &[Vec<f64>]) -> Vec<f64> {
        (0..grid.cells())
            .map(|j| self.chi(grid.node(j), stack[0][j], stack[1][j], stack[2][j]))
            .collect()
    }

    /// `ψ̈` from the evolution equation, with the derivative stack used to build it.
    pub fn accel(&self, grid: &RadialGrid, psi: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let stack = derivative_stack(grid, psi, 2, OuterClosure::ZeroExtension)?;
        let mut acc = Vec::with_capacity(grid.cells());
        for j in 0..grid.cells() {
            let r = grid.node(j);
            let mut a = stack[2][j] + 4.0 * stack[1][j] / r;
            if !self.is_linear() {
                a += self.chi(r, stack[0][j], stack[1][j], stack[2][j]);
            }
            acc.push(a);
        }
        Ok((acc, stack))
    }

    pub fn psiddot(&self, s: &StateVector) -> Result<RadialProfile> {
        let (a, _) = self.accel(s.grid(), s.psi.values())?;
        RadialProfile::new(*s.grid(), a)
    }

    /// `min_j (1 + c2 ψ + c3 rψ')`, the coefficient of `ψ''` in the reduced equation.
    /// The equation is hyperbolic only while this stays positive.
    pub fn principal_margin(&self, grid: &RadialGrid, psi: &[f64]) -> Result<f64> {
        let stack = derivative_stack(grid, psi, 1, OuterClosure::ZeroExtension)?;
        let c = &self.reduction;
        Ok((0..grid.cells())
            .map(|j| 1.0 + c[2] * stack[0][j] + c[3] * grid.node(j) * stack[1][j])
            .fold(f64::INFINITY, f64::min))
    }
}

/// `χ(r_j) = N(u,u)^1 / r_j` from the on-axis jet, one node at a time.
pub fn scalar_rhs(s: &StateVector, tensor: &NullFormTensor) -> Result<RadialProfile> {
    let g = *s.grid();
    let zero = RadialProfile::zeros(g);
    let mut out = Vec::with_capacity(g.cells());
    for j in 0..g.cells() {
        let jet = lift_to_jet(s, j, &zero)?;
        out.push(evaluate_n(tensor, &jet, &jet)[0] / g.node(j));
    }
    RadialProfile::new(g, out)
}

/// Off-axis radiality check at `x = r(1,1,1)/√3`: the largest of `|N²/x₂ − N¹/x₁|` and
/// `|N¹/x₁ − χ|` over the grid, relative to `max_j |χ|` (0 for a vanishing nonlinearity).
pub fn radiality_defect(s: &StateVector, model: &Model) -> Result<f64> {
    let g = *s.grid();
    let p = derivative_stack(&g, s.psi.values(), 2, OuterClosure::ZeroExtension)?;
    let q = derivative_stack(&g, s.psidot.values(), 1, OuterClosure::ZeroExtension)?;
    let c = 1.0 / 3f64.sqrt();
    let w = [c, c, c];
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for j in 0..g.cells() {
        let r = g.node(j);
        let psi = [p[0][j], p[1][j], p[2][j]];
        let chi = model.chi(r, psi[0], psi[1], psi[2]);
        let jet = crate::radialfield::lift_to_jet_at(r, &w, psi, [q[0][j], q[1][j]], 0.0);
        let n = evaluate_n(&model.tensor, &jet, &jet);
        let x = r * c;
        worst = worst.max((n[1] / x - n[0] / x).abs()).max((n[0] / x - chi).abs());
        scale = scale.max(chi.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// One classical RK4 step of the first-order system `(ψ, ψ̇)`.
pub fn step(s: &StateVector, dt: f64, model: &Model) -> Result<StateVector> {
    let g = *s.grid();
    let n = g.cells();
    let p0 = s.psi.values();
    let q0 = s.psidot.values();
    let (a1, _) = model.accel(&g, p0)?;
    let stage = |p: &[f64], dp: &[f64], f: f64| -> Vec<f64> {
        p.iter().zip(dp).map(|(x, d)| x + f * d).collect()
    };
    let p2 = stage(p0, q0, 0.5 * dt);
    let q2 = stage(q0, &a1, 0.5 * dt);
    let (a2, _) = model.accel(&g, &p2)?;
    let p3 = stage(p0, &q2, 0.5 * dt);
    let q3 = stage(q0, &a2, 0.5 * dt);
    let (a3, _) = model.accel(&g, &p3)?;
    let p4 = stage(p0, &q3, dt);
    let q4 = stage(q0, &a3, dt);
    let (a4, _) = model.accel(&g, &p4)?;
    let mut psi = Vec::with_capacity(n);
    let mut psidot = Vec::with_capacity(n);
    for j in 0..n {
        psi.push(p0[j] + dt / 6.0 * (q0[j] + 2.0 * q2[j] + 2.0 * q3[j] + q4[j]));
        psidot.push(q0[j] + dt / 6.0 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j]));
    }
    let t = s.t + dt;
    let out = StateVector::new(RadialProfile::new(g, psi)?, RadialProfile::new(g, psidot)?, t)?;
    if !out.is_finite() {
        return Err(Error::NonFinite(t));
    }
    Ok(out)
}

/// Initial-data shapes; amplitudes are fixed afterwards by the smallness norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DataFamily {
    /// `ψ0 = e^{−r²/w²}`.
    Gaussian { width: f64 },
    /// Smooth plateau: `ψ0 = 1` for `r ≤ plateau`, `0` for `r ≥ support`.
    Bump { plateau: f64, support: f64 },
    /// `ψ0 = e^{−(r−c)²/w²} + e^{−(r+c)²/w²}`.
    Ring { center: f64, width: f64 },
}

impl DataFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::Gaussian { width: 1.0 }),
            "bump" => Ok(Self::Bump { plateau: 1.0, support: 2.0 }),
            "ring" => Ok(Self::Ring { center: 3.0, width: 0.5 }),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Bump { .. } => "bump",
            Self::Ring { .. } => "ring",
        }
    }

    /// Radius beyond which the shape is below double-precision resolution.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Self::Gaussian { width } => 6.0 * width,
            Self::Bump { support, .. } => support,
            Self::Ring { center, width } => center + 6.0 * width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gaussian { width } => width > 0.0,
            Self::Bump { plateau, support } => plateau >= 0.0 && support > plateau,
            Self::Ring { center, width } => center > 0.0 && width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("invalid {} parameters", self.name())))
        }
    }

    /// Unit-amplitude shape at radius `r`.
    pub fn shape(&self, r: f64) -> f64 {
        match *self {
            Self::Gaussian { width } => (-(r / width).powi(2)).exp(),
            Self::Bump { plateau, support } => smooth_step((support - r) / (support - plateau)),
            Self::Ring { center, width } => {
                (-((r - center) / width).powi(2)).exp() + (-((r + center) / width).powi(2)).exp()
            }
        }
    }
}

/// `C^∞` transition from 0 (`x ≤ 0`) to 1 (`x ≥ 1`).
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Data `(ψ0, ψ1 = 0)` scaled so that its smallness norm equals `eps`.
pub fn make_initial_data(family: &DataFamily, eps: f64, grid: RadialGrid) -> Result<StateVector> {
    family.validate()?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidScenario(format!("amplitude must be nonnegative, got {eps}")));
    }
    let shape = RadialProfile::from_fn(grid, |r| family.shape(r));
    let zero = RadialProfile::zeros(grid);
    if eps == 0.0 {
        return StateVector::new(zero.clone(), zero, 0.0);
    }
    let unit = StateVector::new(shape.clone(), zero.clone(), 0.0)?;
    let norm = crate::energies::smallness_norm(&unit)?;
    // The norm is homogeneous of degree one, so the secant step from 0 is the root; one
    // correction absorbs rounding.
    let mut amp = eps / norm;
    let check = crate::energies::smallness_norm(&StateVector::new(shape.scaled(amp), zero.clone(), 0.0)?)?;
    amp *= eps / check;
    StateVector::new(shape.scaled(amp), zero, 0.0)
}

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    Cfl(f64),
    Dt(f64),
}

/// Output plan of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPlan {
    pub cadence: f64,
    pub snapshots: Vec<f64>,
    pub level: ReportLevel,
    pub store_states: bool,
}

/// Stop and regime thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Blowup when `sup|∇u|` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Blowup when `h sup|∂∇u| / sup|∇u|` exceeds this ratio (grid-scale steepening).
    pub steepening: f64,
    /// Smallness threshold `θ` on `sup|∂u|` for the energy equivalence check.
    pub smallness: f64,
    /// Decay bound on the outermost 5% of cells.
    pub boundary_tol: f64,
    /// Smallness bound on `|h| = Σ|h^{ij}_{lm}|` for perturbation checks.
    pub h_bound: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            blowup_factor: 1e3,
            steepening: 4.0,
            smallness: 0.1,
            boundary_tol: 1e-14,
            h_bound: crate::verify::DEFAULT_H_BOUND,
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub seed: u64,
    pub grid: RadialGrid,
    pub time_step: TimeStep,
    pub t_final: f64,
    pub coeffs: CoefficientSet,
    pub family: DataFamily,
    pub epsilon: f64,
    pub output: OutputPlan,
    pub thresholds: Thresholds,
}

impl ScenarioConfig {
    /// Defaults around a grid and final time.
    pub fn new(grid: RadialGrid, t_final: f64, coeffs: CoefficientSet, family: DataFamily, epsilon: f64) -> Self {
        Self {
            id: "run".into(),
            seed: 0,
            grid,
            time_step: TimeStep::Cfl(0.4),
            t_final,
            coeffs,
            family,
            epsilon,
            output: OutputPlan {
                cadence: 1.0,
                snapshots: Vec::new(),
                level: ReportLevel::Full,
                store_states: false,
            },
            thresholds: Thresholds::default(),
        }
    }

    pub fn max_dt(&self) -> f64 {
        match self.time_step {
            TimeStep::Cfl(c) => c * self.grid.h(),
            TimeStep::Dt(dt) => dt,
        }
    }

    /// Internal steps per output interval and the resulting step size.
    pub fn stepping(&self) -> (usize, f64) {
        let k = (self.output.cadence / self.max_dt() - 1e-9).ceil().max(1.0) as usize;
        (k, self.output.cadence / k as f64)
    }

    pub fn output_count(&self) -> usize {
        (self.t_final / self.output.cadence).round() as usize
    }

    /// Every violated invariant as `(key path, message)`.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |k: &str, m: String| v.push((k.to_string(), m));
        let h = self.grid.h();
        match self.time_step {
            TimeStep::Cfl(c) if !(c > 0.0 && c <= 0.5) => {
                push("time.cfl", format!("CFL number must lie in (0, 0.5], got {c}"))
            }
            TimeStep::Dt(dt) if !(dt > 0.0 && dt / h <= 0.5) => push(
                "time.dt",
                format!("dt/h must lie in (0, 0.5], got dt = {dt}, h = {h} (CFL {})", dt / h),
            ),
            _ => {}
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            push("time.t_final", format!("must be positive, got {}", self.t_final));
        }
        if !(self.output.cadence > 0.0) {
            push("output.cadence", format!("must be positive, got {}", self.output.cadence));
        } else {
            let ratio = self.t_final / self.output.cadence;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                push(
                    "output.cadence",
                    format!("must divide t_final = {} into whole intervals", self.t_final),
                );
            }
        }
        for (i, t) in self.output.snapshots.iter().enumerate() {
            if !(*t >= 0.0 && *t <= self.t_final) {
                push(&format!("output.snapshots[{i}]"), format!("time {t} outside [0, t_final]"));
            }
        }
        let need = self.t_final + self.family.support_radius() + 1.0;
        if self.grid.radius() < need {
            push(
                "grid.radius",
                format!(
                    "R = {} must be at least t_final + support + 1 = {need}",
                    self.grid.radius()
                ),
            );
        }
        if let Err(e) = self.coeffs.validate() {
            push("material", e.to_string());
        }
        if let Err(e) = self.family.validate() {
            push("data", e.to_string());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            push("data.epsilon", format!("must be nonnegative, got {}", self.epsilon));
        }
        let t = &self.thresholds;
        if !(t.blowup_factor > 1.0) {
            push("thresholds.blowup_factor", format!("must exceed 1, got {}", t.blowup_factor));
        }
        if !(t.steepening > 0.0) {
            push("thresholds.steepening", format!("must be positive, got {}", t.steepening));
        }
        if !(t.smallness > 0.0) {
            push("thresholds.smallness", format!("must be positive, got {}", t.smallness));
        }
        if !(t.boundary_tol > 0.0) {
            push("thresholds.boundary_tol", format!("must be positive, got {}", t.boundary_tol));
        }
        if !(t.h_bound > 0.0 && t.h_bound < 1.0) {
            push("thresholds.h_bound", format!("must lie in (0, 1), got {}", t.h_bound));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(
                v.iter().map(|(k, m)| format!("{k}: {m}")).collect::<Vec<_>>().join("; "),
            ))
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Blowup { t_star: f64 },
    BoundaryViolation { t: f64 },
    /// Threshold crossed without monotone growth of `sup|∇u|` beforehand.
    Unstable { t: f64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::Blowup { .. } => "blowup",
            Self::BoundaryViolation { .. } => "boundary_violation",
            Self::Unstable { .. } => "unstable",
        }
    }

    pub fn stop_time(&self) -> Option<f64> {
        match *self {
            Self::Completed => None,
            Self::Blowup { t_star } => Some(t_star),
            Self::BoundaryViolation { t } | Self::Unstable { t } => Some(t),
        }
    }
}

/// Per-step gradient monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub t: f64,
    /// `sup_j |∇u|`.
    pub grad: f64,
    /// `sup_j |∂∇u|`.
    pub hess: f64,
}

/// `sup|∇u|` and `sup|∂∇u|` over the grid (rotation invariant, evaluated on the axis).
pub fn gradient_monitor(s: &StateVector) -> Result<Monitor> {
    let g = *s.grid();
    let p = derivative_stack(&g, s.psi.values(), 2, OuterClosure::ZeroExtension)?;
    let q = derivative_stack(&g, s.psidot.values(), 1, OuterClosure::ZeroExtension)?;
    let e1 = [1.0, 0.0, 0.0];
    let mut grad: f64 = 0.0;
    let mut hess: f64 = 0.0;
    for j in 0..g.cells() {
        let r = g.node(j);
        let a = lift_radial(r, &e1, &[p[0][j], p[1][j], p[2][j]], 2);
        let b = lift_radial(r, &e1, &[q[0][j], q[1][j]], 1);
        let gsq: f64 = a.g1.iter().flatten().map(|v| v * v).sum();
        let hsq: f64 = a.g2.iter().flatten().flatten().map(|v| v * v).sum::<f64>()
            + b.g1.iter().flatten().map(|v| v * v).sum::<f64>();
        grad = grad.max(gsq.sqrt());
        hess = hess.max(hsq.sqrt());
    }
    Ok(Monitor { t: s.t, grad, hess })
}

/// Result of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: ScenarioConfig,
    pub dt: f64,
    pub states: Vec<StateVector>,
    pub snapshots: Vec<StateVector>,
    pub reports: Vec<EnergyReport>,
    pub snapshots_detail: Vec<Snapshot>,
    pub monitors: Vec<Monitor>,
    pub outcome: Outcome,
}

impl Trajectory {
    /// `sup_t E3^{1/2} / E3^{1/2}(0)`; 1 for zero data.
    pub fn energy_ratio(&self) -> f64 {
        let e0 = self.reports.first().map(|r| r.e3).unwrap_or(0.0);
        if e0 <= 0.0 {
            return 1.0;
        }
        let sup = self.reports.iter().map(|r| r.e3).fold(0.0, f64::max);
        (sup / e0).sqrt()
    }

    pub fn final_time(&self) -> f64 {
        self.reports.last().map(|r| r.t).unwrap_or(0.0)
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Integrates the configured scenario, emitting reports at the output cadence.
pub fn run(cfg: &ScenarioConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let model = Model::new(cfg.coeffs);
    let init = make_initial_data(&cfg.family, cfg.epsilon, cfg.grid)?;
    run_from(cfg, &model, init)
}

/// As [`run`] but starting from explicit initial data and model.
pub fn run_from(cfg: &ScenarioConfig, model: &Model, init: StateVector) -> Result<Trajectory> {
    let (per_output, dt) = cfg.stepping();
    let n_out = cfg.output_count();
    let eval = EnergyEvaluator::new(model.clone(), cfg.output.level);
    let mut running = RunningIntegrals::default();
    let mut traj = Trajectory {
        config: cfg.clone(),
        dt,
        states: Vec::new(),
        snapshots: Vec::new(),
        reports: Vec::new(),
        snapshots_detail: Vec::new(),
        monitors: Vec::new(),
        outcome: Outcome::Completed,
    };
    let mut pending_snapshots: Vec<f64> = cfg.output.snapshots.clone();
    pending_snapshots.sort_by(f64::total_cmp);

    let mut record = |traj: &mut Trajectory, s: &StateVector, pending: &mut Vec<f64>| -> Result<()> {
        let snap = eval.snapshot(s)?;
        let report = running.push(&snap);
        traj.reports.push(report);
        traj.snapshots_detail.push(snap);
        if cfg.output.store_states {
            traj.states.push(s.clone());
        }
        while let Some(&ts) = pending.first() {
            if ts <= s.t + 0.5 * dt {
                traj.snapshots.push(s.clone());
                pending.remove(0);
            } else {
                break;
            }
        }
        Ok(())
    };

    let mut s = init;
    let m0 = gradient_monitor(&s)?;
    let limit = cfg.thresholds.blowup_factor * m0.grad;
    let h = s.grid().h();
    let mut history: Vec<f64> = vec![m0.grad];
    traj.monitors.push(m0);
    record(&mut traj, &s, &mut pending_snapshots)?;

    'outer: for k in 1..=n_out {
        for i in 0..per_output {
            let t_next = ((k - 1) * per_output + i + 1) as f64 * dt;
            let next = match step(&s, dt, model) {
                Ok(n) => n,
                Err(Error::NonFinite(_)) => {
                    let tail = &history[history.len().saturating_sub(5)..];
                    traj.outcome = if tail.len() == 5 && strictly_increasing(tail) {
                        Outcome::Blowup { t_star: t_next }
                    } else {
                        Outcome::Unstable { t: t_next }
                    };
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
            s = next;
            s.t = t_next;
            let m = gradient_monitor(&s)?;
            history.push(m.grad);
            let steep = if m.grad > 0.0 { h * m.hess / m.grad } else { 0.0 };
            if (m0.grad > 0.0 && m.grad > limit) || steep > cfg.thresholds.steepening {
                traj.monitors.push(m);
                let tail = &history[history.len().saturating_sub(5)..];
                traj.outcome = if tail.len() == 5 && strictly_increasing(tail) {
                    Outcome::Blowup { t_star: s.t }
                } else {
                    Outcome::Unstable { t: s.t }
                };
                break 'outer;
            }
            if i + 1 == per_output {
                traj.monitors.push(m);
            }
        }
        s.t = k as f64 * cfg.output.cadence;
        record(&mut traj, &s, &mut pending_snapshots)?;
        if s.edge_magnitude() > cfg.thresholds.boundary_tol {
            traj.outcome = Outcome::BoundaryViolation { t: s.t };
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_has_no_reduction() {
        assert_eq!(Model::linear().reduction(), [0.0; 4]);
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = RadialGrid::new(10.0, 64).unwrap();
        let m = Model::new(CoefficientSet::reduced(1.0, 1.0, 1.0));
        let s = step(&StateVector::zeros(g, 0.0), 0.05, &m).unwrap();
        assert_eq!(s.psi.max_abs(), 0.0);
        assert_eq!(s.psidot.max_abs(), 0.0);
    }

    #[test]
    fn unknown_family_rejected() {
        assert!(matches!(DataFamily::parse("sine"), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cfl_violation_named() {
        let g = RadialGrid::new(40.0, 400).unwrap();
        let mut cfg = ScenarioConfig::new(g, 10.0, CoefficientSet::reduced(0.0, 1.0, 1.0), DataFamily::parse("gaussian").unwrap(), 1e-3);
        cfg.time_step = TimeStep::Cfl(0.9);
        let v = cfg.violations();
        assert!(v.iter().any(|(k, m)| k == "time.cfl" && m.contains("0.5")));
    }
}
