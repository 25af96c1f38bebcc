//! Vector-field energies of a radial state.
//!
//! Every functional is a radial integral of an angular average of pointwise densities built
//! from the commuted fields `Z^a u`, `Z^a ∈ {1, ∂_i, S, ∂_i∂_j, ∂_i S}`. Each `Z^a u` is again
//! a lifted field, so its jets come from the radial derivatives of `ψ`, `ψ̇`, `ψ̈` and of the
//! scalar reductions of `S u` and `□u`. Time derivatives beyond `ψ̇` are always taken from
//! the evolution equation.
//!
//! The summed densities are invariant under coordinate permutations and reflections and are
//! polynomials of degree at most four in `ω`, so the three orbit representatives of the
//! 26-point octahedral rule average them exactly.

use crate::error::{Error, Result};
use crate::nullform::{evaluate_n, evaluate_trilinear, Grad, NullFormTensor, VectorJet2};
use crate::radialfield::{
    derivative_stack, integrate_density, lift_radial, LiftedField, OuterClosure, RadialGrid,
    SphereRule, StateVector, WeightSpec,
};
use crate::solver::Model;
use serde::{Deserialize, Serialize};

/// One commuting field `Z^a`, applied as `∂^{a'} S^{a_4}` with `S` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZIndex {
    Identity,
    D(usize),
    S,
    DD(usize, usize),
    DS(usize),
}

impl ZIndex {
    /// Multi-index `(a_1, a_2, a_3, a_4)`.
    pub fn multi_index(&self) -> [usize; 4] {
        let mut a = [0; 4];
        match *self {
            Self::Identity => {}
            Self::D(i) => a[i] += 1,
            Self::S => a[3] = 1,
            Self::DD(i, j) => {
                a[i] += 1;
                a[j] += 1;
            }
            Self::DS(i) => {
                a[i] += 1;
                a[3] = 1;
            }
        }
        a
    }

    pub fn order(&self) -> usize {
        self.multi_index().iter().sum()
    }
}

/// The commuting fields with `|a| ≤ 2` and at most one scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexPlan {
    entries: Vec<ZIndex>,
}

impl MultiIndexPlan {
    pub fn standard() -> Self {
        let mut entries = vec![ZIndex::Identity];
        entries.extend((0..3).map(ZIndex::D));
        entries.push(ZIndex::S);
        for i in 0..3 {
            for j in i..3 {
                entries.push(ZIndex::DD(i, j));
            }
        }
        entries.extend((0..3).map(ZIndex::DS));
        Self { entries }
    }

    pub fn entries(&self) -> &[ZIndex] {
        &self.entries
    }
}

/// Which functionals a snapshot evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportLevel {
    /// `E3` only.
    Energy,
    /// Every report field.
    Full,
    /// Every report field plus the terms of the energy identity.
    Identity,
}

/// Right-hand side terms of the energy identity at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdentityTerms {
    /// `Σ_{|a|=2} ∫ e^{−q} Ñ(Z^a u, ∂_t u, Z^a u)`.
    pub trilinear_dt: f64,
    /// `Σ_{|a|=2} ∫ e^{−q} q' Ñ(Z^a u, u, Z^a u)`.
    pub trilinear_ghost: f64,
    /// `−2 Σ_{|a|=2} ∫ e^{−q} q' g T_l(Z^a u)^i ∂_m u^j ∂_n(Z^a u)^k`.
    pub good_derivative: f64,
    /// `Σ_{|a|≤2} ∫ e^{−q}⟨∂_t Z^a u, □Z^a u⟩ − 2 Σ_{|a|=2} ∫ e^{−q}⟨∂_t Z^a u, N(u, Z^a u)⟩`.
    pub lower_order: f64,
}

impl IdentityTerms {
    pub fn total(&self) -> f64 {
        self.trilinear_dt + self.trilinear_ghost + self.good_derivative + self.lower_order
    }
}

/// Instantaneous functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub e3: f64,
    pub ghost_e3: f64,
    pub x3: f64,
    pub n3: f64,
    /// Integrand of the local energy at this time (over `r ≤ 1`).
    pub l3_density: f64,
    pub etilde3: f64,
    pub smallness: f64,
    /// `Σ_{|a|≤1} ‖□∇^a u‖`.
    pub box_norm: f64,
    /// `sup |∂u|` over the grid.
    pub sup_du: f64,
    pub identity: Option<IdentityTerms>,
}

impl Snapshot {
    /// Equivalence check `(2c)^{-1} E3 ≤ Ẽ3 ≤ 2c E3`, `c = e^{π/2}`.
    pub fn equivalence_holds(&self) -> bool {
        let c = std::f64::consts::FRAC_PI_2.exp();
        self.etilde3 >= self.e3 / (2.0 * c) && self.etilde3 <= 2.0 * c * self.e3
    }
}

/// One NDJSON row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    #[serde(rename = "E3")]
    pub e3: f64,
    #[serde(rename = "ghost_E3")]
    pub ghost_e3: f64,
    #[serde(rename = "X3")]
    pub x3: f64,
    #[serde(rename = "N3")]
    pub n3: f64,
    #[serde(rename = "M3_running")]
    pub m3_running: f64,
    #[serde(rename = "L3_running")]
    pub l3_running: f64,
    #[serde(rename = "Etilde3")]
    pub etilde3: f64,
    pub smallness_eps: f64,
}

/// Trapezoidal accumulation of `𝓜3` and `𝓛3` at the output cadence.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningIntegrals {
    pub m3: f64,
    pub l3: f64,
    last: Option<(f64, f64, f64)>,
}

/// `M + (t_1 − t_0)(N_0 + N_1)/2`.
pub fn kss_accumulate(m3: f64, n3_prev: f64, n3: f64, dt: f64) -> f64 {
    m3 + 0.5 * dt * (n3_prev + n3)
}

impl RunningIntegrals {
    pub fn push(&mut self, s: &Snapshot) -> EnergyReport {
        if let Some((t0, n0, l0)) = self.last {
            let dt = s.t - t0;
            self.m3 = kss_accumulate(self.m3, n0, s.n3, dt);
            self.l3 = kss_accumulate(self.l3, l0, s.l3_density, dt);
        }
        self.last = Some((s.t, s.n3, s.l3_density));
        EnergyReport {
            t: s.t,
            e3: s.e3,
            ghost_e3: s.ghost_e3,
            x3: s.x3,
            n3: s.n3,
            m3_running: self.m3,
            l3_running: self.l3,
            etilde3: s.etilde3,
            smallness_eps: s.smallness,
        }
    }
}

/// Radial derivatives at one node.
#[derive(Debug, Clone, Copy, Default)]
struct NodeJets {
    r: f64,
    psi: [f64; 5],
    psidot: [f64; 4],
    /// `χ_S = tψ̇ + rψ' + ψ` and derivatives.
    chis: [f64; 4],
    /// `∂_t χ_S` and first derivative.
    chis_t: [f64; 2],
    /// `χ` and derivatives.
    chi: [f64; 3],
    /// `tχ̇ + rχ' + 3χ` and first derivative: `□(S u) = x (·)`.
    chi_box_s: [f64; 2],
}

/// Jets of one `Z^a u` at a point.
#[derive(Debug, Clone, Copy, Default)]
struct ZJet {
    val: [f64; 3],
    dt: [f64; 3],
    grad: Grad,
    hess: [[[f64; 3]; 3]; 3],
    boxv: [f64; 3],
}

/// Pointwise densities, averaged over directions at one node.
#[derive(Debug, Clone, Copy, Default)]
struct Densities {
    e: f64,
    z: f64,
    tt: f64,
    g: f64,
    x0: f64,
    x1: f64,
    s: [f64; 4],
    s_t: [f64; 4],
    b0: f64,
    b1: f64,
    t1: f64,
    t3: f64,
    lo: f64,
}

impl Densities {
    fn add_scaled(&mut self, o: &Densities, w: f64) {
        self.e += w * o.e;
        self.z += w * o.z;
        self.tt += w * o.tt;
        self.g += w * o.g;
        self.x0 += w * o.x0;
        self.x1 += w * o.x1;
        for k in 0..4 {
            self.s[k] += w * o.s[k];
            self.s_t[k] += w * o.s_t[k];
        }
        self.b0 += w * o.b0;
        self.b1 += w * o.b1;
        self.t1 += w * o.t1;
        self.t3 += w * o.t3;
        self.lo += w * o.lo;
    }
}

fn sq3(v: &[f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn sq33(g: &Grad) -> f64 {
    g.iter().map(sq3).sum()
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn spatial_jet(grad: &Grad, hess: &[[[f64; 3]; 3]; 3]) -> VectorJet2 {
    let mut j = VectorJet2::default();
    for l in 0..3 {
        j.du[l + 1] = grad[l];
        for m in 0..3 {
            j.ddu[l + 1][m + 1] = hess[l][m];
        }
    }
    j
}

struct PointLifts {
    psi: LiftedField,
    pd: LiftedField,
    s: LiftedField,
    st: LiftedField,
    chi: LiftedField,
    cbs: LiftedField,
}

fn z_jet(a: ZIndex, l: &PointLifts) -> ZJet {
    let mut z = ZJet::default();
    match a {
        ZIndex::Identity => {
            z.val = l.psi.v;
            z.dt = l.pd.v;
            z.grad = l.psi.g1;
            z.hess = l.psi.g2;
            z.boxv = l.chi.v;
        }
        ZIndex::D(i) => {
            z.val = l.psi.g1[i];
            z.dt = l.pd.g1[i];
            for a in 0..3 {
                z.grad[a] = l.psi.g2[a][i];
                for b in 0..3 {
                    z.hess[a][b] = l.psi.g3[a][b][i];
                }
            }
            z.boxv = l.chi.g1[i];
        }
        ZIndex::S => {
            z.val = l.s.v;
            z.dt = l.st.v;
            z.grad = l.s.g1;
            z.hess = l.s.g2;
            z.boxv = l.cbs.v;
        }
        ZIndex::DD(i, j) => {
            z.val = l.psi.g2[i][j];
            z.dt = l.pd.g2[i][j];
            for a in 0..3 {
                z.grad[a] = l.psi.g3[a][i][j];
                for b in 0..3 {
                    z.hess[a][b] = l.psi.g4[a][b][i][j];
                }
            }
            z.boxv = l.chi.g2[i][j];
        }
        ZIndex::DS(i) => {
            z.val = l.s.g1[i];
            z.dt = l.st.g1[i];
            for a in 0..3 {
                z.grad[a] = l.s.g2[a][i];
                for b in 0..3 {
                    z.hess[a][b] = l.s.g3[a][b][i];
                }
            }
            z.boxv = l.cbs.g1[i];
        }
    }
    z
}

/// Evaluates the report functionals of a model's states.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    pub model: Model,
    pub level: ReportLevel,
    rule: SphereRule,
    plan: MultiIndexPlan,
}

impl EnergyEvaluator {
    pub fn new(model: Model, level: ReportLevel) -> Self {
        Self { model, level, rule: SphereRule::octahedral_orbits(), plan: MultiIndexPlan::standard() }
    }

    /// Replaces the angular rule (the default relies on octahedral symmetry).
    pub fn with_rule(mut self, rule: SphereRule) -> Self {
        self.rule = rule;
        self
    }

    fn tensor(&self) -> &NullFormTensor {
        &self.model.tensor
    }

    fn node_jets(&self, s: &StateVector) -> Result<Vec<NodeJets>> {
        let g = *s.grid();
        let identity = self.level == ReportLevel::Identity;
        let cl = OuterClosure::ZeroExtension;
        let p = derivative_stack(&g, s.psi.values(), 4, cl)?;
        let q = derivative_stack(&g, s.psidot.values(), 3, cl)?;
        let (acc, _) = self.model.accel(&g, s.psi.values())?;
        let a = derivative_stack(&g, &acc, 1, cl)?;
        let chi = self.model.chi_profile(&g, &p);
        let c = derivative_stack(&g, &chi, 2, cl)?;
        let chidot: Vec<f64> = (0..g.cells())
            .map(|j| {
                self.model.chi_dot(
                    g.node(j),
                    [p[0][j], p[1][j], p[2][j]],
                    [q[0][j], q[1][j], q[2][j]],
                )
            })
            .collect();
        let cd = if identity { derivative_stack(&g, &chidot, 1, cl)? } else { vec![chidot.clone(), vec![0.0; g.cells()]] };
        let t = s.t;
        Ok((0..g.cells())
            .map(|j| {
                let r = g.node(j);
                let mut nj = NodeJets { r, ..Default::default() };
                for k in 0..5 {
                    nj.psi[k] = p[k][j];
                }
                for k in 0..4 {
                    nj.psidot[k] = q[k][j];
                    let next = if k + 1 < 5 { p[k + 1][j] } else { 0.0 };
                    nj.chis[k] = t * q[k][j] + r * next + (k as f64 + 1.0) * p[k][j];
                }
                for k in 0..2 {
                    nj.chis_t[k] = t * a[k][j] + r * q[k + 1][j] + (k as f64 + 2.0) * q[k][j];
                    nj.chi_box_s[k] = t * cd[k][j] + r * c[k + 1][j] + (k as f64 + 3.0) * c[k][j];
                }
                for k in 0..3 {
                    nj.chi[k] = c[k][j];
                }
                nj
            })
            .collect())
    }

    fn point(&self, nj: &NodeJets, w: &[f64; 3]) -> Densities {
        let identity = self.level == ReportLevel::Identity;
        let r = nj.r;
        let lifts = PointLifts {
            psi: lift_radial(r, w, &nj.psi, if identity { 4 } else { 3 }),
            pd: lift_radial(r, w, &nj.psidot, 2),
            s: lift_radial(r, w, &nj.chis, if identity { 3 } else { 2 }),
            st: lift_radial(r, w, &nj.chis_t, 1),
            chi: lift_radial(r, w, &nj.chi, 2),
            cbs: lift_radial(r, w, &nj.chi_box_s, 1),
        };
        let tensor = self.tensor();
        let nonlinear = !self.model.is_linear();
        let gu = lifts.psi.g1;
        let u_jet = spatial_jet(&gu, &lifts.psi.g2);
        let mut d = Densities::default();
        for &a in self.plan.entries() {
            let z = z_jet(a, &lifts);
            d.e += sq3(&z.dt) + sq33(&z.grad);
            d.z += sq3(&z.val);
            let mut tmat = [[0.0; 3]; 3];
            for l in 0..3 {
                for p in 0..3 {
                    tmat[l][p] = w[l] * z.dt[p] + z.grad[l][p];
                }
            }
            d.tt += sq33(&tmat);
            if identity {
                d.lo += dot3(&z.dt, &z.boxv);
            }
            if a.order() == 2 && nonlinear {
                d.g += evaluate_trilinear(tensor, &z.grad, &gu, &z.grad);
                if identity {
                    d.t1 += evaluate_trilinear(tensor, &z.grad, &lifts.pd.g1, &z.grad);
                    d.t3 += -2.0 * evaluate_trilinear(tensor, &tmat, &gu, &z.grad);
                    let n = evaluate_n(tensor, &u_jet, &spatial_jet(&z.grad, &z.hess));
                    d.lo -= 2.0 * dot3(&z.dt, &n);
                }
            }
        }
        if self.level != ReportLevel::Energy {
            d.x0 = sq33(&lifts.pd.g1) + lifts.psi.g2.iter().map(sq33).sum::<f64>();
            d.s[0] = sq33(&gu);
            d.s_t[0] = sq3(&lifts.pd.v);
            d.b0 = sq3(&lifts.chi.v);
            for i in 0..3 {
                let mut h = 0.0;
                for a in 0..3 {
                    h += sq3(&lifts.pd.g2[a][i]);
                    for b in 0..3 {
                        h += sq3(&lifts.psi.g3[a][b][i]);
                    }
                }
                d.x1 += h;
                d.s[1] += sq33(&lifts.psi.g2[i]);
                d.s_t[1] += sq3(&lifts.pd.g1[i]);
                d.b1 += sq3(&lifts.chi.g1[i]);
                for j in i..3 {
                    let k = if i == j { 2 } else { 3 };
                    d.s[k] += sq33(&lifts.psi.g3[i][j]);
                    d.s_t[k] += sq3(&lifts.pd.g2[i][j]);
                }
            }
        }
        d
    }

    fn densities(&self, s: &StateVector) -> Result<(Vec<Densities>, f64)> {
        let jets = self.node_jets(s)?;
        let mut sup_du: f64 = 0.0;
        let out = jets
            .iter()
            .map(|nj| {
                let mut acc = Densities::default();
                for (w, wt) in self.rule.dirs.iter().zip(&self.rule.weights) {
                    acc.add_scaled(&self.point(nj, w), *wt);
                }
                let a = lift_radial(nj.r, &[1.0, 0.0, 0.0], &nj.psi, 1);
                let du = (nj.r * nj.r * nj.psidot[0] * nj.psidot[0] + sq33(&a.g1)).sqrt();
                sup_du = sup_du.max(du);
                acc
            })
            .collect();
        Ok((out, sup_du))
    }

    /// Evaluates the configured functionals.
    pub fn snapshot(&self, s: &StateVector) -> Result<Snapshot> {
        let g = *s.grid();
        let t = s.t;
        let (dens, sup_du) = self.densities(s)?;
        let col = |f: &dyn Fn(&Densities) -> f64| -> Vec<f64> { dens.iter().map(f).collect() };
        let integ = |v: &[f64], w: &WeightSpec| integrate_density(&g, v, 0.0, w, t);
        let unit = WeightSpec::unit();
        let e = col(&|d| d.e);
        let mut snap = Snapshot { t, sup_du, ..Default::default() };
        snap.e3 = 0.5 * integ(&e, &unit);
        if self.level == ReportLevel::Energy {
            return Ok(snap);
        }
        let z = col(&|d| d.z);
        let ghost = WeightSpec::unit().with_ghost(0.5);
        let ghost_q = WeightSpec::unit().with_ghost(0.5).with_bracket_t_minus_r(-1.0);
        snap.ghost_e3 = 0.5 * integ(&col(&|d| d.tt), &ghost_q);
        let kss_d = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-0.25);
        let kss_z = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-1.25);
        snap.n3 = integ(&e, &kss_d) + integ(&z, &kss_z);
        let loc_d = WeightSpec::unit().with_power_r(-0.25).within(1.0);
        let loc_z = WeightSpec::unit().with_power_r(-1.25).within(1.0);
        snap.l3_density = integ(&e, &loc_d) + integ(&z, &loc_z);
        let gsum = col(&|d| d.g);
        snap.etilde3 = 0.5 * integ(&e, &ghost) + integ(&gsum, &ghost);
        let ks = WeightSpec::unit().with_bracket_t_minus_r(1.0);
        snap.x3 = class_norms(integ(&col(&|d| d.x0), &ks), &[(integ(&col(&|d| d.x1), &ks), 3)]);
        let jr = WeightSpec::unit().with_bracket_r(1.0);
        let sm = |k: usize, tpart: bool| {
            integ(&col(&|d: &Densities| if tpart { d.s_t[k] } else { d.s[k] }), &jr)
        };
        snap.smallness = class_norms(sm(0, false), &[(sm(1, false), 3), (sm(2, false), 3), (sm(3, false), 3)])
            + class_norms(sm(0, true), &[(sm(1, true), 3), (sm(2, true), 3), (sm(3, true), 3)]);
        snap.box_norm = class_norms(integ(&col(&|d| d.b0), &unit), &[(integ(&col(&|d| d.b1), &unit), 3)]);
        if self.level == ReportLevel::Identity {
            snap.identity = Some(IdentityTerms {
                trilinear_dt: integ(&col(&|d| d.t1), &ghost),
                trilinear_ghost: integ(&gsum, &ghost_q),
                good_derivative: integ(&col(&|d| d.t3), &ghost_q),
                lower_order: integ(&col(&|d| d.lo), &ghost),
            });
        }
        Ok(snap)
    }
}

/// `√A0 + Σ_c m_c √(A_c / m_c)` for classes of `m_c` members with equal integrals.
fn class_norms(single: f64, classes: &[(f64, usize)]) -> f64 {
    single.max(0.0).sqrt()
        + classes
            .iter()
            .map(|&(a, m)| m as f64 * (a.max(0.0) / m as f64).sqrt())
            .sum::<f64>()
}

/// `E3 = Σ_a ½∫ |∂_t Z^a u|² + |∇Z^a u|²`.
pub fn energy_e3(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Energy).snapshot(s)?.e3)
}

/// Ghost-weight energy `½ Σ_a ∫ e^{−q}⟨t−r⟩^{−2}|T Z^a u|²`.
pub fn ghost_energy(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Full).snapshot(s)?.ghost_e3)
}

/// `𝓝3` at the state's time.
pub fn kss_density_n3(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Full).snapshot(s)?.n3)
}

/// Integrand of `𝓛3` (restricted to `r ≤ 1`) at the state's time.
pub fn local_l3_density(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Full).snapshot(s)?.l3_density)
}

/// `𝓧3 = Σ_{|a|≤1} ‖⟨t−r⟩ ∂∇∇^a u‖`.
pub fn ks_energy_x3(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Full).snapshot(s)?.x3)
}

/// Perturbed energy `Ẽ3`.
pub fn perturbed_energy(s: &StateVector, model: &Model) -> Result<f64> {
    Ok(EnergyEvaluator::new(model.clone(), ReportLevel::Full).snapshot(s)?.etilde3)
}

/// `Σ_{|a|≤2} ‖⟨x⟩∇^a∇u0‖ + Σ_{|a|≤2} ‖⟨x⟩∇^a u1‖` with `u0 = xψ`, `u1 = xψ̇`.
pub fn smallness_norm(s: &StateVector) -> Result<f64> {
    let at_zero = StateVector { t: 0.0, ..s.clone() };
    Ok(EnergyEvaluator::new(Model::linear(), ReportLevel::Full).snapshot(&at_zero)?.smallness)
}

/// One sample of the identity residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub t: f64,
    pub d_etilde: f64,
    pub ghost_e3: f64,
    pub rhs: f64,
    pub residual: f64,
    pub e3: f64,
}

/// Residual `dẼ3/dt + ℰ3 − RHS` at the interior samples of a uniformly spaced segment.
pub fn energy_identity_residual(segment: &[StateVector], model: &Model) -> Result<Vec<ResidualSample>> {
    if segment.len() < 5 {
        return Err(Error::SegmentTooShort { len: segment.len(), min: 5 });
    }
    let dt = segment[1].t - segment[0].t;
    for w in segment.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::NonUniformSegment);
        }
    }
    let eval = EnergyEvaluator::new(model.clone(), ReportLevel::Identity);
    let snaps = segment.iter().map(|s| eval.snapshot(s)).collect::<Result<Vec<_>>>()?;
    Ok((2..snaps.len() - 2)
        .map(|k| {
            let e = |i: usize| snaps[i].etilde3;
            let d = (e(k - 2) - 8.0 * e(k - 1) + 8.0 * e(k + 1) - e(k + 2)) / (12.0 * dt);
            let rhs = snaps[k].identity.map(|i| i.total()).unwrap_or(0.0);
            ResidualSample {
                t: snaps[k].t,
                d_etilde: d,
                ghost_e3: snaps[k].ghost_e3,
                rhs,
                residual: d + snaps[k].ghost_e3 - rhs,
                e3: snaps[k].e3,
            }
        })
        .collect())
}

/// Run-wide constant of the Klainerman–Sideris bound: `max_t 𝓧3 / (E3^{1/2} + t Σ‖□∇^a u‖)`.
pub fn ks_constant(snaps: &[Snapshot]) -> f64 {
    snaps
        .iter()
        .map(|s| {
            let d = s.e3.max(0.0).sqrt() + s.t * s.box_norm;
            if d > 0.0 {
                s.x3 / d
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log(𝓜3(t) / (log(2+t) sup_{s≤t} E3))` against `log(1+t)` over the
/// reports with `t ∈ [t0, t1]`. `None` when fewer than two usable points remain.
pub fn kss_growth_exponent(reports: &[EnergyReport], t0: f64, t1: f64) -> Option<f64> {
    let mut sup = 0.0f64;
    let mut pts = Vec::new();
    for r in reports {
        sup = sup.max(r.e3);
        if r.t >= t0 && r.t <= t1 && r.m3_running > 0.0 && sup > 0.0 {
            pts.push(((1.0 + r.t).ln(), (r.m3_running / ((2.0 + r.t).ln() * sup)).ln()));
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// First-order energy `½∫ |∂_t u|² + |∇u|²` of the lifted state.
pub fn energy_e1(s: &StateVector) -> Result<f64> {
    let g: RadialGrid = *s.grid();
    let p = derivative_stack(&g, s.psi.values(), 1, OuterClosure::ZeroExtension)?;
    let dens: Vec<f64> = (0..g.cells())
        .map(|j| {
            let r = g.node(j);
            let (a, b, c) = (p[0][j], p[1][j], s.psidot.values()[j]);
            r * r * c * c + 2.0 * a * a + (a + r * b).powi(2)
        })
        .collect();
    Ok(0.5 * integrate_density(&g, &dens, 0.0, &WeightSpec::unit(), s.t))
}
