//! Weighted Sobolev and Hardy inequalities for lifted radial fields `u = x f(|x|)`.
//!
//! Rotations of the radial field vanish, so every sum over `Ω̃^a` collapses to its `a = 0`
//! term. Pointwise magnitudes are rotation invariant and are read off the axis.

use crate::error::{Error, Result};
use crate::radialfield::{
    derivative_stack, fornberg_weights, integrate_density, jbracket, lift_radial, OuterClosure,
    RadialProfile, WeightSpec,
};
use serde::{Deserialize, Serialize};

/// One inequality of the suite, written as `sup-norm LHS ≤ C · RHS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `‖r u‖_∞ ≤ C(‖∇u‖ + ‖u‖)`.
    Weight1,
    /// `‖r^{1/2} u‖_∞ ≤ C‖∇u‖`.
    Weight2,
    /// `‖r^{1/4} u‖_{∞, r≤1} ≤ C(‖⟨r⟩^{-1/4}r^{-1/4}∇u‖ + ‖⟨r⟩^{-1/4}r^{-1/4}u‖ + ‖⟨r⟩^{-1/4}r^{-5/4}u‖)`.
    Charu,
    /// `‖r⟨t−r⟩u‖_∞ ≤ C(‖⟨t−r⟩∇u‖ + ‖⟨t−r⟩u‖)`.
    Weight3,
    /// `‖r^{1/2}⟨t−r⟩u‖_∞ ≤ C(‖u‖ + ‖⟨t−r⟩∇u‖)`.
    Weight4,
    /// `‖⟨t−r⟩u‖_∞ ≤ C(‖∇u‖ + ‖⟨t−r⟩∇²u‖)`.
    Weight5,
    /// `‖u/r‖ ≤ 2‖∇u‖`.
    Hardy,
}

impl Inequality {
    pub const ALL: [Inequality; 7] = [
        Self::Weight1,
        Self::Weight2,
        Self::Charu,
        Self::Weight3,
        Self::Weight4,
        Self::Weight5,
        Self::Hardy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Weight1 => "weight1",
            Self::Weight2 => "weight2",
            Self::Charu => "charu",
            Self::Weight3 => "weight3",
            Self::Weight4 => "weight4",
            Self::Weight5 => "weight5",
            Self::Hardy => "hardy",
        }
    }
}

/// Pointwise magnitudes `|u|`, `|∇u|`, `|∇²u|` and `|u|/r` per node.
struct Magnitudes {
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
    u_over_r: Vec<f64>,
}

fn magnitudes(p: &RadialProfile) -> Result<Magnitudes> {
    let g = *p.grid();
    let st = derivative_stack(&g, p.values(), 2, OuterClosure::ZeroExtension)?;
    let e1 = [1.0, 0.0, 0.0];
    let mut m = Magnitudes { u: vec![], du: vec![], ddu: vec![], u_over_r: vec![] };
    for j in 0..g.cells() {
        let r = g.node(j);
        let l = lift_radial(r, &e1, &[st[0][j], st[1][j], st[2][j]], 2);
        m.u.push(r * st[0][j].abs());
        m.u_over_r.push(st[0][j].abs());
        m.du.push(l.g1.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
        m.ddu.push(l.g2.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(m)
}

fn l2(p: &RadialProfile, v: &[f64], power: f64, w: WeightSpec, t: f64) -> f64 {
    let d: Vec<f64> = v.iter().map(|x| x * x).collect();
    integrate_density(p.grid(), &d, power, &w, t).max(0.0).sqrt()
}

/// Sixth-order interpolated `|u| = r|f|` at radius `r`, when six surrounding nodes exist.
fn value_at(p: &RadialProfile, r: f64) -> Option<f64> {
    let g = p.grid();
    let k = (r / g.h() - 0.5).floor() as isize;
    if k < 2 || k as usize + 3 >= g.cells() {
        return None;
    }
    let idx: Vec<usize> = (k - 2..=k + 3).map(|i| i as usize).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| g.node(i)).collect();
    let w = fornberg_weights(r, &xs, 0);
    Some(r * idx.iter().zip(&w[0]).map(|(&i, c)| c * p.values()[i]).sum::<f64>())
}

/// Both sides `(LHS, RHS)` of one inequality for the lift of `p` at time `t`.
pub fn sobolev_sides(p: &RadialProfile, ineq: Inequality, t: f64) -> Result<(f64, f64)> {
    let g = *p.grid();
    let m = magnitudes(p)?;
    let sup = |f: &dyn Fn(usize) -> f64| (0..g.cells()).map(f).fold(0.0, f64::max);
    let unit = WeightSpec::unit();
    let tr = WeightSpec::unit().with_bracket_t_minus_r(1.0);
    let wt = |r: f64| jbracket(t - r);
    Ok(match ineq {
        Inequality::Weight1 => (
            sup(&|j| g.node(j) * m.u[j]),
            l2(p, &m.du, 0.0, unit, t) + l2(p, &m.u, 2.0, unit, t),
        ),
        Inequality::Weight2 => (sup(&|j| g.node(j).sqrt() * m.u[j]), l2(p, &m.du, 0.0, unit, t)),
        Inequality::Charu => {
            let nodes = sup(&|j| if g.node(j) <= 1.0 { g.node(j).powf(0.25) * m.u[j] } else { 0.0 });
            let lhs = nodes.max(value_at(p, 1.0).map_or(0.0, f64::abs));
            let a = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-0.25);
            let b = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-1.25);
            (lhs, l2(p, &m.du, 0.0, a, t) + l2(p, &m.u, 2.0, a, t) + l2(p, &m.u, 2.0, b, t))
        }
        Inequality::Weight3 => (
            sup(&|j| g.node(j) * wt(g.node(j)) * m.u[j]),
            l2(p, &m.du, 0.0, tr, t) + l2(p, &m.u, 2.0, tr, t),
        ),
        Inequality::Weight4 => (
            sup(&|j| g.node(j).sqrt() * wt(g.node(j)) * m.u[j]),
            l2(p, &m.u, 2.0, unit, t) + l2(p, &m.du, 0.0, tr, t),
        ),
        Inequality::Weight5 => (
            sup(&|j| wt(g.node(j)) * m.u[j]),
            l2(p, &m.du, 0.0, unit, t) + l2(p, &m.ddu, 0.0, tr, t),
        ),
        Inequality::Hardy => (l2(p, &m.u_over_r, 0.0, unit, t), l2(p, &m.du, 0.0, unit, t)),
    })
}

/// `LHS / RHS`; zero for the zero field.
pub fn sobolev_ratio(p: &RadialProfile, ineq: Inequality, t: f64) -> Result<f64> {
    let (lhs, rhs) = sobolev_sides(p, ineq, t)?;
    if rhs == 0.0 {
        return if lhs == 0.0 { Ok(0.0) } else { Err(Error::InequalityViolation { lhs }) };
    }
    Ok(lhs / rhs)
}
