//! Multiplier identities for `M = f(r)∂_r + f(r)/r`:
//! `⟨Mu, □u⟩ = ∂_t e + ∇·p̂ + q̂` and `⟨Mu, Hu⟩ = ∇·p̃ + q̃`, checked in integrated form over the
//! ball `r ≤ R'` with `R' = 0.9R`, where the divergences become surface fluxes.

use super::perturbation::{hidx, PerturbationTensor};
use crate::error::{Error, Result};
use crate::radialfield::{
    derivative_stack, integrate_radial, lift_radial, OuterClosure, RadialGrid, RadialProfile,
    SphereRule, StateVector,
};
use crate::solver::Model;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Multiplier profile `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierSpec {
    /// `f = (r/(1+r))^{1/2}`.
    Sqrt,
    /// `f = r/(r+ρ)`, `ρ ≥ 1`.
    Rho { rho: f64 },
}

impl MultiplierSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Rho { rho } if !(rho >= 1.0) => {
                Err(Error::Multiplier(format!("rho must be at least 1, got {rho}")))
            }
            _ => Ok(()),
        }
    }

    /// `(f, f', f'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Self::Sqrt => {
                let a = 1.0 + r;
                (
                    (r / a).sqrt(),
                    0.5 / (r.sqrt() * a.powf(1.5)),
                    -(1.0 + 4.0 * r) / (4.0 * r.powf(1.5) * a.powf(2.5)),
                )
            }
            Self::Rho { rho } => {
                let a = r + rho;
                (r / a, rho / (a * a), -2.0 * rho / a.powi(3))
            }
        }
    }

    /// Power `p` with `f ~ r^p` at the origin.
    pub fn origin_power(&self) -> f64 {
        match self {
            Self::Sqrt => 0.5,
            Self::Rho { .. } => 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Sqrt => "sqrt".into(),
            Self::Rho { rho } => format!("rho={rho}"),
        }
    }
}

/// Face index `m` with `R' = m h ≈ 0.9 R`.
fn flux_face(g: &RadialGrid) -> usize {
    (0.9 * g.cells() as f64).round() as usize
}

/// Value at the face between nodes `m−1` and `m`, sixth-order midpoint interpolation.
fn face_value(v: &[f64], m: usize) -> f64 {
    const W: [f64; 6] = [3.0, -25.0, 150.0, 150.0, -25.0, 3.0];
    (0..6).map(|k| W[k] * v[m + k - 3]).sum::<f64>() / 256.0
}

/// `∫_0^{R'} 4π r² g dr`.
fn ball(g: &RadialGrid, dens: &[f64], power: f64, upper: f64) -> f64 {
    let v: Vec<f64> = dens.iter().enumerate().map(|(j, d)| 4.0 * PI * g.node(j).powi(2) * d).collect();
    integrate_radial(g, &v, power + 2.0, Some(upper))
}

/// Integrated terms of the unperturbed identity at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiplierSample {
    pub t: f64,
    /// `∫⟨Mu, □u⟩`.
    pub lhs: f64,
    /// `d/dt ∫e`.
    pub de_dt: f64,
    /// `∮ p̂·ω`.
    pub flux: f64,
    /// `∫q̂`.
    pub bulk: f64,
    /// `|lhs − de_dt − flux − bulk|` over the sum of the magnitudes.
    pub residual: f64,
}

struct Balance {
    e: f64,
    lhs: f64,
    flux: f64,
    bulk: f64,
}

fn radial_balance(s: &StateVector, spec: &MultiplierSpec, model: &Model) -> Result<Balance> {
    let g = *s.grid();
    let cl = OuterClosure::ZeroExtension;
    let p = derivative_stack(&g, s.psi.values(), 2, cl)?;
    let chi = model.chi_profile(&g, &p);
    let pd = s.psidot.values();
    let n = g.cells();
    let (mut e, mut q, mut l) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let r = g.node(j);
        let (f, f1, f2) = spec.eval(r);
        let (a, b, c) = (p[0][j], p[1][j], pd[j]);
        let m = 2.0 * a + r * b;
        let dr = a + r * b;
        e[j] = f * r * c * m;
        q[j] = 0.5 * f1 * r * r * c * c + 0.5 * f1 * dr * dr + (f / r - 0.5 * f1) * 2.0 * a * a
            - 0.5 * f2 * r * a * a;
        l[j] = f * m * r * chi[j];
    }
    let mface = flux_face(&g);
    let rf = mface as f64 * g.h();
    let (a, b, c) = (face_value(&p[0], mface), face_value(&p[1], mface), face_value(pd, mface));
    let (f, f1, _) = spec.eval(rf);
    let grad2 = 2.0 * a * a + (a + rf * b).powi(2);
    let pw = 0.5 * f * (grad2 - rf * rf * c * c) - f * (2.0 * a + rf * b) * (a + rf * b)
        + 0.5 * (rf * f1 - f) * a * a;
    let fp = spec.origin_power();
    Ok(Balance {
        e: ball(&g, &e, fp + 1.0, rf),
        lhs: ball(&g, &l, fp + 1.0, rf),
        flux: 4.0 * PI * rf * rf * pw,
        bulk: ball(&g, &q, fp - 1.0, rf),
    })
}

fn check_segment(segment: &[StateVector]) -> Result<f64> {
    if segment.len() < 5 {
        return Err(Error::SegmentTooShort { len: segment.len(), min: 5 });
    }
    let dt = segment[1].t - segment[0].t;
    for w in segment.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.abs().max(1.0) || w[1].grid() != segment[0].grid() {
            return Err(Error::NonUniformSegment);
        }
    }
    Ok(dt)
}

/// Residual of `∫⟨Mu, □u⟩ = d/dt∫e + ∮p̂·ω + ∫q̂` at the interior samples of a segment, with
/// `□u = xχ` taken from the model.
pub fn multiplier_identity_residual(
    segment: &[StateVector],
    spec: &MultiplierSpec,
    model: &Model,
) -> Result<Vec<MultiplierSample>> {
    spec.validate()?;
    let dt = check_segment(segment)?;
    let b = segment.iter().map(|s| radial_balance(s, spec, model)).collect::<Result<Vec<_>>>()?;
    Ok((2..b.len() - 2)
        .map(|k| {
            let de = (b[k - 2].e - 8.0 * b[k - 1].e + 8.0 * b[k + 1].e - b[k + 2].e) / (12.0 * dt);
            let scale = b[k].lhs.abs() + de.abs() + b[k].flux.abs() + b[k].bulk.abs();
            let diff = b[k].lhs - de - b[k].flux - b[k].bulk;
            MultiplierSample {
                t: segment[k].t,
                lhs: b[k].lhs,
                de_dt: de,
                flux: b[k].flux,
                bulk: b[k].bulk,
                residual: if scale > 0.0 { diff.abs() / scale } else { 0.0 },
            }
        })
        .collect())
}

/// Integrated terms of `∫⟨Mu, Hu⟩ = ∮p̃·ω + ∫q̃` for one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StaticBalance {
    pub lhs: f64,
    pub flux: f64,
    pub bulk: f64,
    pub residual: f64,
}

/// `(⟨Mu, Hu⟩, p̃·ω, q̃)` at `x = rω`.
fn perturbed_point(
    r: f64,
    w: &[f64; 3],
    p: &[f64; 3],
    h: &[f64; 81],
    hr: &[f64; 81],
    spec: &MultiplierSpec,
) -> (f64, f64, f64) {
    let (f, f1, _) = spec.eval(r);
    let l = lift_radial(r, w, p, 2);
    let du = &l.g1;
    let mut mu = [0.0; 3];
    for i in 0..3 {
        mu[i] = f * ((0..3).map(|k| w[k] * du[k][i]).sum::<f64>() + l.v[i] / r);
    }
    let hu = super::perturbation::apply_h(w, h, hr, &l);
    let lhs = mu[0] * hu[0] + mu[1] * hu[1] + mu[2] * hu[2];
    let g = (r * f1 - f) / r;
    let (mut pw, mut q) = (0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for m in 0..3 {
                    let k = hidx(i, j, a, m);
                    let (c, cr) = (h[k], hr[k]);
                    if c == 0.0 && cr == 0.0 {
                        continue;
                    }
                    let dmj = du[m][j];
                    // ω_k ∂_k u^i is the radial derivative.
                    let dri: f64 = (0..3).map(|b| w[b] * du[b][i]).sum();
                    let ddot = du[a][i] * dmj;
                    pw += f * w[a] * c * dri * dmj - 0.5 * f * c * ddot + f / r * w[a] * c * l.v[i] * dmj;
                    q += -g * w[a] * c * dri * dmj + 0.5 * f1 * c * ddot + 0.5 * f * cr * ddot
                        - f / r * c * ddot
                        - g / r * w[a] * c * l.v[i] * dmj;
                }
            }
        }
    }
    (lhs, pw, q)
}

/// Balance of the perturbed identity for the lift of `psi`.
pub fn perturbed_multiplier_balance(
    psi: &RadialProfile,
    h: &PerturbationTensor,
    spec: &MultiplierSpec,
) -> Result<StaticBalance> {
    spec.validate()?;
    let g = *psi.grid();
    if *h.grid() != g {
        return Err(Error::GridMismatch);
    }
    let n = g.cells();
    let p = derivative_stack(&g, psi.values(), 2, OuterClosure::ZeroExtension)?;
    let rule = SphereRule::fine();
    let mut lhs = vec![0.0; n];
    let mut q = vec![0.0; n];
    for j in 0..n {
        let r = g.node(j);
        let pj = [p[0][j], p[1][j], p[2][j]];
        for (w, wt) in rule.dirs.iter().zip(&rule.weights) {
            let (a, _, c) = perturbed_point(r, w, &pj, h.at(j), h.dr_at(j), spec);
            lhs[j] += wt * a;
            q[j] += wt * c;
        }
    }
    let mface = flux_face(&g);
    let rf = mface as f64 * g.h();
    let pf = [face_value(&p[0], mface), face_value(&p[1], mface), face_value(&p[2], mface)];
    let mut hf = [0.0; 81];
    let mut hrf = [0.0; 81];
    for k in 0..81 {
        let col: Vec<f64> = (mface - 3..mface + 3).map(|j| h.at(j)[k]).collect();
        let colr: Vec<f64> = (mface - 3..mface + 3).map(|j| h.dr_at(j)[k]).collect();
        hf[k] = face_value(&col, 3);
        hrf[k] = face_value(&colr, 3);
    }
    let flux_avg: f64 = rule
        .dirs
        .iter()
        .zip(&rule.weights)
        .map(|(w, wt)| wt * perturbed_point(rf, w, &pf, &hf, &hrf, spec).1)
        .sum();
    let fp = spec.origin_power();
    let lhs = ball(&g, &lhs, fp, rf);
    let flux = 4.0 * PI * rf * rf * flux_avg;
    let bulk = ball(&g, &q, fp - 1.0, rf);
    let scale = lhs.abs() + flux.abs() + bulk.abs();
    Ok(StaticBalance {
        lhs,
        flux,
        bulk,
        residual: if scale > 0.0 { (lhs - flux - bulk).abs() / scale } else { 0.0 },
    })
}

/// Largest normalized perturbed-identity residual over a segment.
pub fn perturbed_multiplier_residual(
    segment: &[StateVector],
    h: &PerturbationTensor,
    spec: &MultiplierSpec,
) -> Result<f64> {
    check_segment(segment)?;
    let mut worst: f64 = 0.0;
    for s in segment {
        worst = worst.max(perturbed_multiplier_balance(&s.psi, h, spec)?.residual);
    }
    Ok(worst)
}

/// Empirical constant of the multiplier estimate on a linear segment: the time integral of
/// the coercive bulk divided by `‖∂u(0)‖²`.
///
/// For `f = r/(r+ρ)` the bulk is `ρ(r+ρ)^{-2}(|∂_t u|² + |∂_r u|²) + (2r+ρ)(r+ρ)^{-2}|∇_ω u|²
/// + ρ r^{-1}(r+ρ)^{-3}|u|²`; for the square-root multiplier it is
/// `r^{-1/2}|∂u|² + r^{-5/2}|u|²` on `r ≤ 1`.
pub fn multiplier_constant(segment: &[StateVector], spec: &MultiplierSpec) -> Result<f64> {
    spec.validate()?;
    let dt = check_segment(segment)?;
    let g = *segment[0].grid();
    let n = g.cells();
    let mut series = Vec::with_capacity(segment.len());
    let mut initial = 0.0;
    for (k, s) in segment.iter().enumerate() {
        let p = derivative_stack(&g, s.psi.values(), 1, OuterClosure::ZeroExtension)?;
        let pd = s.psidot.values();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            let r = g.node(j);
            let (a, b, c) = (p[0][j], p[1][j], pd[j]);
            let dt2 = r * r * c * c;
            let dr2 = (a + r * b).powi(2);
            let ang2 = 2.0 * a * a;
            e[j] = dt2 + dr2 + ang2;
            d[j] = match *spec {
                MultiplierSpec::Rho { rho } => {
                    let s = r + rho;
                    rho / (s * s) * (dt2 + dr2) + (2.0 * r + rho) / (s * s) * ang2 + rho * r / s.powi(3) * a * a
                }
                MultiplierSpec::Sqrt => {
                    if r <= 1.0 {
                        r.powf(-0.5) * (dt2 + dr2 + ang2) + r.powf(-0.5) * a * a
                    } else {
                        0.0
                    }
                }
            };
        }
        let (power, upper) = match spec {
            MultiplierSpec::Rho { .. } => (0.0, None),
            MultiplierSpec::Sqrt => (-0.5, Some(1.0)),
        };
        let v: Vec<f64> = d.iter().enumerate().map(|(j, x)| 4.0 * PI * g.node(j).powi(2) * x).collect();
        series.push(integrate_radial(&g, &v, power + 2.0, upper));
        if k == 0 {
            let v: Vec<f64> = e.iter().enumerate().map(|(j, x)| 4.0 * PI * g.node(j).powi(2) * x).collect();
            initial = integrate_radial(&g, &v, 2.0, None);
        }
    }
    if initial <= 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for w in series.windows(2) {
        total += 0.5 * dt * (w[0] + w[1]);
    }
    Ok(total / initial)
}
