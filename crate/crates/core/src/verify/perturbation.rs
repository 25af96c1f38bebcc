//! Perturbed wave operator `□_h u = □u + Hu`, `(Hu)^i = ∂_l(h^{ij}_{lm} ∂_m u^j)`, and the
//! weighted space-time estimate it satisfies for small symmetric `h`.

use crate::error::{Error, Result};
use crate::radialfield::{
    derivative_stack, integrate_density, lift_radial, LiftedField, OuterClosure, RadialGrid,
    RadialProfile, SphereRule, StateVector, WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Flat index of `h^{ij}_{lm}`.
#[inline]
pub fn hidx(i: usize, j: usize, l: usize, m: usize) -> usize {
    ((i * 3 + j) * 3 + l) * 3 + m
}

/// Coefficients `h^{ij}_{lm}(t, r)` on a radial grid, each component a radial profile,
/// together with their `r`- and `t`-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTensor {
    grid: RadialGrid,
    values: Vec<[f64; 81]>,
    dr: Vec<[f64; 81]>,
    dt: Vec<[f64; 81]>,
}

/// `½(h^{ij}_{lm} + h^{ji}_{ml})`.
pub fn symmetrize(c: &[f64; 81]) -> [f64; 81] {
    let mut out = [0.0; 81];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    out[hidx(i, j, l, m)] = 0.5 * (c[hidx(i, j, l, m)] + c[hidx(j, i, m, l)]);
                }
            }
        }
    }
    out
}

impl PerturbationTensor {
    pub fn zeros(grid: RadialGrid) -> Self {
        let z = vec![[0.0; 81]; grid.cells()];
        Self { grid, values: z.clone(), dr: z.clone(), dt: z }
    }

    /// `h = C φ(r)` with `∂_t h = C φ_t(r)`; `φ` must be even in `r`.
    pub fn separable(grid: RadialGrid, coeff: &[f64; 81], phi: impl Fn(f64) -> f64, phi_t: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid.cells();
        let prof: Vec<f64> = (0..n).map(|j| phi(grid.node(j))).collect();
        let d = derivative_stack(&grid, &prof, 1, OuterClosure::OneSided)?;
        let scale = |s: f64| {
            let mut a = *coeff;
            a.iter_mut().for_each(|v| *v *= s);
            a
        };
        Ok(Self {
            grid,
            values: prof.iter().map(|&p| scale(p)).collect(),
            dr: d[1].iter().map(|&p| scale(p)).collect(),
            dt: (0..n).map(|j| scale(phi_t(grid.node(j)))).collect(),
        })
    }

    /// Constant coefficients.
    pub fn constant(grid: RadialGrid, coeff: &[f64; 81]) -> Result<Self> {
        Self::separable(grid, coeff, |_| 1.0, |_| 0.0)
    }

    /// Seeded random symmetric coefficients with `|h| = amplitude` at the origin, profile
    /// `e^{−r²/w²}`.
    pub fn random(grid: RadialGrid, seed: u64, amplitude: f64, width: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = [0.0; 81];
        c.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let mut c = symmetrize(&c);
        let norm: f64 = c.iter().map(|v| v.abs()).sum();
        c.iter_mut().for_each(|v| *v *= amplitude / norm);
        Self::separable(grid, &c, |r| (-(r / width).powi(2)).exp(), |_| 0.0)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn at(&self, j: usize) -> &[f64; 81] {
        &self.values[j]
    }

    pub fn dr_at(&self, j: usize) -> &[f64; 81] {
        &self.dr[j]
    }

    pub fn dt_at(&self, j: usize) -> &[f64; 81] {
        &self.dt[j]
    }

    /// `max_j |h^{ij}_{lm} − h^{ji}_{ml}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for v in &self.values {
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for m in 0..3 {
                            d = d.max((v[hidx(i, j, l, m)] - v[hidx(j, i, m, l)]).abs());
                        }
                    }
                }
            }
        }
        d
    }

    /// `sup_r Σ |h^{ij}_{lm}|`.
    pub fn magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Rejects asymmetric or large coefficients.
    pub fn validate(&self, bound: f64) -> Result<()> {
        if self.symmetry_defect() != 0.0 {
            return Err(Error::Perturbation(format!(
                "h^ij_lm differs from h^ji_ml by {:e}",
                self.symmetry_defect()
            )));
        }
        if self.magnitude() > bound {
            return Err(Error::Perturbation(format!(
                "|h| = {} exceeds the smallness bound {bound}",
                self.magnitude()
            )));
        }
        Ok(())
    }
}

/// `(Hu)^i` at `x = rω` from the lifted jets of `u` and the coefficients at that radius.
pub fn apply_h(w: &[f64; 3], h: &[f64; 81], hr: &[f64; 81], u: &LiftedField) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let mut s = 0.0;
        for j in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let k = hidx(i, j, l, m);
                    s += w[l] * hr[k] * u.g1[m][j] + h[k] * u.g2[l][m][j];
                }
            }
        }
        out[i] = s;
    }
    out
}

/// Space-time radial fields `u = x ψ(t, r)` with closed-form `□u = x χ(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManufacturedField {
    /// `ψ = cos(κt) e^{−r²/w²}`.
    ModulatedGaussian { width: f64, freq: f64 },
    /// Exact outgoing wave `ψ = ∂_r(A(r−t)/r)/r`, `A(s) = e^{−(s−c)²/w²}`; `□u = 0`.
    OutgoingPulse { center: f64, width: f64 },
}

impl ManufacturedField {
    /// `([ψ, ψ', ψ''], ψ̇, χ)` at `(t, r)`.
    pub fn eval(&self, t: f64, r: f64) -> ([f64; 3], f64, f64) {
        match *self {
            Self::ModulatedGaussian { width, freq } => {
                let w2 = width * width;
                let gs = (-r * r / w2).exp();
                let (c, s) = ((freq * t).cos(), (freq * t).sin());
                let g1 = -2.0 * r / w2 * gs;
                let g2 = (4.0 * r * r / (w2 * w2) - 2.0 / w2) * gs;
                let lap = (4.0 * r * r / (w2 * w2) - 10.0 / w2) * gs;
                ([c * gs, c * g1, c * g2], -freq * s * gs, -freq * freq * c * gs - c * lap)
            }
            Self::OutgoingPulse { center, width } => {
                let w2 = width * width;
                let s = r - t;
                let z = s - center;
                let a = (-z * z / w2).exp();
                let a1 = -2.0 * z / w2 * a;
                let a2 = (4.0 * z * z / (w2 * w2) - 2.0 / w2) * a;
                let a3 = (-8.0 * z.powi(3) / w2.powi(3) + 12.0 * z / (w2 * w2)) * a;
                // ψ = (A' r − A)/r³ and its r-derivatives.
                let p0 = (a1 * r - a) / r.powi(3);
                let p1 = a2 / (r * r) - 3.0 * a1 / r.powi(3) + 3.0 * a / r.powi(4);
                let p2 = a3 / (r * r) - 5.0 * a2 / r.powi(3) + 12.0 * a1 / r.powi(4) - 12.0 * a / r.powi(5);
                let pd = (-a2 * r + a1) / r.powi(3);
                ([p0, p1, p2], pd, 0.0)
            }
        }
    }

    /// The field sampled on `grid` at time `t`.
    pub fn state(&self, grid: RadialGrid, t: f64) -> Result<StateVector> {
        let psi = RadialProfile::from_fn(grid, |r| self.eval(t, r).0[0]);
        let psidot = RadialProfile::from_fn(grid, |r| self.eval(t, r).1);
        StateVector::new(psi, psidot, t)
    }
}

/// Both sides of the weighted space-time estimate, term by term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KssSides {
    /// `‖⟨r⟩^{-1/4}r^{-1/4}∂u‖² + ‖⟨r⟩^{-1/4}r^{-5/4}u‖²` over `[0,t] × ℝ³`.
    pub global: f64,
    /// `‖r^{-1/4}∂u‖² + ‖r^{-5/4}u‖²` over `[0,t] × {r ≤ 1}`.
    pub local: f64,
    /// `‖∂u(0)‖²`.
    pub initial: f64,
    /// `‖(|∇u| + ⟨r⟩^{-1/2}r^{-1/2}|u|) □_h u‖_{L¹}`.
    pub source: f64,
    /// `‖(|∂h| + ⟨r⟩^{-1/2}r^{-1/2}|h|)|∇u|(|∇u| + |u|/r)‖_{L¹}`.
    pub coefficient: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl KssSides {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            0.0
        }
    }
}

fn simpson(v: &[f64], dt: f64) -> f64 {
    let n = v.len() - 1;
    if n % 2 == 1 {
        // Trapezoid on the final interval keeps odd counts usable.
        return simpson(&v[..n], dt) + 0.5 * dt * (v[n - 1] + v[n]);
    }
    if n == 0 {
        return 0.0;
    }
    let mut s = v[0] + v[n];
    for (k, x) in v.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * x;
    }
    s * dt / 3.0
}

/// Evaluates every term of the estimate for `u` on `[0, t]` with `steps` time intervals.
pub fn kss_inequality_check(
    u: &ManufacturedField,
    h: &PerturbationTensor,
    bound: f64,
    t: f64,
    steps: usize,
) -> Result<KssSides> {
    h.validate(bound)?;
    if !(t > 0.0) || steps < 2 {
        return Err(Error::InvalidScenario(format!("need t > 0 and at least 2 steps, got t = {t}, steps = {steps}")));
    }
    let g = *h.grid();
    let n = g.cells();
    let dt = t / steps as f64;
    let rule = SphereRule::fine();
    let trivial_h = h.magnitude() == 0.0 && h.dt.iter().all(|v| v.iter().all(|x| *x == 0.0));
    let kss_a = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-0.25);
    let kss_b = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-1.25);
    let loc_a = WeightSpec::unit().with_power_r(-0.25).within(1.0);
    let loc_b = WeightSpec::unit().with_power_r(-1.25).within(1.0);
    let unit = WeightSpec::unit();
    let mut series = vec![[0.0; 5]; steps + 1];
    let mut initial = 0.0;
    for (k, row) in series.iter_mut().enumerate() {
        let tk = k as f64 * dt;
        let mut du2 = Vec::with_capacity(n);
        let mut u2 = Vec::with_capacity(n);
        let mut src_a = Vec::with_capacity(n);
        let mut src_b = Vec::with_capacity(n);
        let mut coef_a = Vec::with_capacity(n);
        let mut coef_b = Vec::with_capacity(n);
        for j in 0..n {
            let r = g.node(j);
            let (p, pd, chi) = u.eval(tk, r);
            let hv = h.at(j);
            let hr = h.dr_at(j);
            let ht_abs: f64 = h.dt_at(j).iter().map(|x| x.abs()).sum();
            let hr_abs: f64 = hr.iter().map(|x| x.abs()).sum();
            let habs: f64 = hv.iter().map(|x| x.abs()).sum();
            let mut acc = [0.0; 4];
            let mut add = |w: &[f64; 3], wt: f64| {
                let l = lift_radial(r, w, &p, 2);
                let grad: f64 = l.g1.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                let mut boxh = [r * w[0] * chi, r * w[1] * chi, r * w[2] * chi];
                if !trivial_h {
                    let hu = apply_h(w, hv, hr, &l);
                    for q in 0..3 {
                        boxh[q] += hu[q];
                    }
                }
                let bn = (boxh[0] * boxh[0] + boxh[1] * boxh[1] + boxh[2] * boxh[2]).sqrt();
                // |∂h| sums |∂_α h^{ij}_{lm}| with ∂_l h = ω_l h'.
                let dh = ht_abs + hr_abs * (w[0].abs() + w[1].abs() + w[2].abs());
                let tail = grad * (grad + p[0].abs());
                acc[0] += wt * grad * bn;
                acc[1] += wt * r * p[0].abs() * bn;
                acc[2] += wt * dh * tail;
                acc[3] += wt * habs * tail;
            };
            if trivial_h {
                add(&[1.0, 0.0, 0.0], 1.0);
            } else {
                for (w, wt) in rule.dirs.iter().zip(&rule.weights) {
                    add(w, *wt);
                }
            }
            let l = lift_radial(r, &[1.0, 0.0, 0.0], &p, 1);
            let g2: f64 = l.g1.iter().flatten().map(|v| v * v).sum();
            du2.push(g2 + r * r * pd * pd);
            u2.push(r * r * p[0] * p[0]);
            src_a.push(acc[0]);
            src_b.push(acc[1]);
            coef_a.push(acc[2]);
            coef_b.push(acc[3]);
        }
        let half = WeightSpec::unit().with_bracket_r(-0.25).with_power_r(-0.25);
        row[0] = integrate_density(&g, &du2, 0.0, &kss_a, tk) + integrate_density(&g, &u2, 2.0, &kss_b, tk);
        row[1] = integrate_density(&g, &du2, 0.0, &loc_a, tk) + integrate_density(&g, &u2, 2.0, &loc_b, tk);
        row[2] = integrate_density(&g, &src_a, 0.0, &unit, tk) + integrate_density(&g, &src_b, 1.0, &half, tk);
        row[3] = integrate_density(&g, &coef_a, 0.0, &unit, tk) + integrate_density(&g, &coef_b, 0.0, &half, tk);
        if k == 0 {
            initial = integrate_density(&g, &du2, 0.0, &unit, tk);
        }
    }
    let col = |c: usize| simpson(&series.iter().map(|r| r[c]).collect::<Vec<_>>(), dt);
    let mut s = KssSides {
        global: col(0),
        local: col(1),
        initial,
        source: col(2),
        coefficient: col(3),
        ..Default::default()
    };
    s.lhs = s.global / (2.0 + t).ln() + s.local;
    s.rhs = s.initial + s.source + s.coefficient;
    Ok(s)
}
