use super::grid::{RadialProfile, StateVector};
use super::stencil::{derivative_stack, OuterClosure};
use crate::error::{Error, Result};
use crate::nullform::VectorJet2;

/// Spatial derivatives up to order four of a lifted field `x f(|x|)` at one point.
///
/// `g_k[a_1]..[a_k][p] = ∂_{a_1}..∂_{a_k} (x_p f)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LiftedField {
    pub v: [f64; 3],
    pub g1: [[f64; 3]; 3],
    pub g2: [[[f64; 3]; 3]; 3],
    pub g3: [[[[f64; 3]; 3]; 3]; 3],
    pub g4: [[[[[f64; 3]; 3]; 3]; 3]; 3],
}

#[inline]
fn kd(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Lifts radial derivatives `f[k] = f^{(k)}(r)` to the vector field `x f(|x|)` at `x = r ω`,
/// computing derivatives through `order ≤ 4` (requires `f.len() ≥ order + 1`).
///
/// With `s = r²/2` and `F_k = (d/ds)^k f`, the scalar derivatives are polynomials in `x` and
/// `δ` with coefficients `F_1..F_4`.
pub fn lift_radial(r: f64, w: &[f64; 3], f: &[f64], order: usize) -> LiftedField {
    let x = [r * w[0], r * w[1], r * w[2]];
    let mut out = LiftedField::default();
    let f0 = f[0];
    for p in 0..3 {
        out.v[p] = x[p] * f0;
    }
    if order == 0 {
        return out;
    }
    let ir = 1.0 / r;
    let big1 = f[1] * ir;
    let big2 = if order >= 2 { (f[2] - big1) * ir * ir } else { 0.0 };
    let big3 = if order >= 3 { (f[3] - 3.0 * r * big2) * ir.powi(3) } else { 0.0 };
    let big4 = if order >= 4 {
        (f[4] - 6.0 * f[3] * ir + 15.0 * f[2] * ir * ir - 15.0 * f[1] * ir.powi(3)) * ir.powi(4)
    } else {
        0.0
    };

    let mut s1 = [0.0; 3];
    for a in 0..3 {
        s1[a] = big1 * x[a];
    }
    for a in 0..3 {
        for p in 0..3 {
            out.g1[a][p] = x[p] * s1[a] + kd(p, a) * f0;
        }
    }
    if order == 1 {
        return out;
    }
    let mut s2 = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            s2[a][b] = big1 * kd(a, b) + big2 * x[a] * x[b];
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            for p in 0..3 {
                out.g2[a][b][p] = x[p] * s2[a][b] + kd(p, a) * s1[b] + kd(p, b) * s1[a];
            }
        }
    }
    if order == 2 {
        return out;
    }
    let mut s3 = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                s3[a][b][c] = big2 * (kd(a, b) * x[c] + kd(a, c) * x[b] + kd(b, c) * x[a])
                    + big3 * x[a] * x[b] * x[c];
            }
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for p in 0..3 {
                    out.g3[a][b][c][p] = x[p] * s3[a][b][c]
                        + kd(p, a) * s2[b][c]
                        + kd(p, b) * s2[a][c]
                        + kd(p, c) * s2[a][b];
                }
            }
        }
    }
    if order == 3 {
        return out;
    }
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let s4 = big2 * (kd(a, b) * kd(c, d) + kd(a, c) * kd(b, d) + kd(a, d) * kd(b, c))
                        + big3
                            * (kd(a, b) * x[c] * x[d]
                                + kd(a, c) * x[b] * x[d]
                                + kd(a, d) * x[b] * x[c]
                                + kd(b, c) * x[a] * x[d]
                                + kd(b, d) * x[a] * x[c]
                                + kd(c, d) * x[a] * x[b])
                        + big4 * x[a] * x[b] * x[c] * x[d];
                    for p in 0..3 {
                        out.g4[a][b][c][d][p] = x[p] * s4
                            + kd(p, a) * s3[b][c][d]
                            + kd(p, b) * s3[a][c][d]
                            + kd(p, c) * s3[a][b][d]
                            + kd(p, d) * s3[a][b][c];
                    }
                }
            }
        }
    }
    out
}

/// Second-order space-time jet of `u = x ψ` at `x = r ω` from
/// `psi = [ψ, ψ', ψ'']`, `psidot = [ψ̇, ψ̇']` and `ψ̈`.
pub fn lift_to_jet_at(r: f64, w: &[f64; 3], psi: [f64; 3], psidot: [f64; 2], psiddot: f64) -> VectorJet2 {
    let a = lift_radial(r, w, &psi, 2);
    let b = lift_radial(r, w, &psidot, 1);
    let mut j = VectorJet2 { u: a.v, ..Default::default() };
    j.du[0] = b.v;
    for l in 0..3 {
        j.du[l + 1] = a.g1[l];
        for p in 0..3 {
            j.ddu[0][l + 1][p] = b.g1[l][p];
            j.ddu[l + 1][0][p] = b.g1[l][p];
        }
        for m in 0..3 {
            j.ddu[l + 1][m + 1] = a.g2[l][m];
        }
    }
    for p in 0..3 {
        j.ddu[0][0][p] = r * w[p] * psiddot;
    }
    j
}

/// Jet of the lifted state at `x = r_j e_1`.
pub fn lift_to_jet(s: &StateVector, j: usize, psiddot: &RadialProfile) -> Result<VectorJet2> {
    let g = *s.grid();
    if j >= g.cells() {
        return Err(Error::NodeOutOfRange { index: j, cells: g.cells() });
    }
    if psiddot.grid() != &g {
        return Err(Error::GridMismatch);
    }
    let p = derivative_stack(&g, s.psi.values(), 2, OuterClosure::OneSided)?;
    let q = derivative_stack(&g, s.psidot.values(), 1, OuterClosure::OneSided)?;
    Ok(lift_to_jet_at(
        g.node(j),
        &[1.0, 0.0, 0.0],
        [p[0][j], p[1][j], p[2][j]],
        [q[0][j], q[1][j]],
        psiddot.values()[j],
    ))
}

/// Scalar reduction of `S u = x χ_S` together with its time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPair {
    /// `χ_S = t ψ̇ + r ψ' + ψ`.
    pub value: RadialProfile,
    /// `∂_t χ_S = t ψ̈ + r ψ̇' + 2 ψ̇`.
    pub dt: RadialProfile,
}

/// Scaling field `S = t ∂_t + r ∂_r` applied to the lifted state.
pub fn apply_scaling(s: &StateVector, psiddot: &RadialProfile) -> Result<ScaledPair> {
    let g = *s.grid();
    if psiddot.grid() != &g {
        return Err(Error::GridMismatch);
    }
    let p = derivative_stack(&g, s.psi.values(), 1, OuterClosure::OneSided)?;
    let q = derivative_stack(&g, s.psidot.values(), 1, OuterClosure::OneSided)?;
    let t = s.t;
    let value = (0..g.cells())
        .map(|j| t * q[0][j] + g.node(j) * p[1][j] + p[0][j])
        .collect();
    let dt = (0..g.cells())
        .map(|j| t * psiddot.values()[j] + g.node(j) * q[1][j] + 2.0 * q[0][j])
        .collect();
    Ok(ScaledPair { value: RadialProfile::new(g, value)?, dt: RadialProfile::new(g, dt)? })
}
