use super::grid::{RadialGrid, RadialProfile};
use super::weight::WeightSpec;
use std::f64::consts::PI;

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
///
/// Returns `w[d][k]`, the weight of `xs[k]` in the `d`-th derivative at `x0`, for
/// `d = 0..=max_order`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

const BERNOULLI: [f64; 10] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
];

/// Dirichlet eta function for `s > 0` (Borwein's alternating-series acceleration).
fn eta(s: f64) -> f64 {
    const N: usize = 40;
    let mut d = vec![0.0; N + 1];
    let mut term = 1.0 / N as f64;
    let mut sum = term;
    d[0] = N as f64 * sum;
    for i in 1..=N {
        // term_i = (N+i-1)! 4^i / ((N-i)! (2i)!), built incrementally from term_0 = 1/N.
        term *= (N + i - 1) as f64 * 4.0 * (N - i + 1) as f64 / ((2 * i - 1) * 2 * i) as f64;
        sum += term;
        d[i] = N as f64 * sum;
    }
    let mut acc = 0.0;
    for k in 0..N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (d[k] - d[N]) / ((k + 1) as f64).powf(s);
    }
    -acc / d[N]
}

/// Riemann zeta for non-integer `s` or `s > 1`.
fn zeta(s: f64) -> f64 {
    if s > 0.0 {
        eta(s) / (1.0 - 2f64.powf(1.0 - s))
    } else {
        // Functional equation.
        2f64.powf(s)
            * PI.powf(s - 1.0)
            * (PI * s / 2.0).sin()
            * statrs::function::gamma::gamma(1.0 - s)
            * zeta(1.0 - s)
    }
}

/// Hurwitz zeta `ζ(s, 1/2) = (2^s − 1) ζ(s)`; exact Bernoulli values at non-positive integers.
pub fn hurwitz_zeta_half(s: f64) -> f64 {
    if s <= 0.0 && s == s.round() {
        let n = (-s) as usize;
        if n + 1 < BERNOULLI.len() {
            let m = n + 1;
            let bm_half = (2f64.powi(1 - m as i32) - 1.0) * BERNOULLI[m];
            return -bm_half / m as f64;
        }
    }
    (2f64.powf(s) - 1.0) * zeta(s)
}

const ORIGIN_FIT: usize = 8;

/// `∫_0^b g(r) dr` from node samples, with `g(r) ~ r^p S(r)` near the origin.
///
/// Midpoint sum with origin corrections `ζ(−p−k, 1/2) S_k h^{p+k+1}` for `k = 0..3`,
/// Euler-Maclaurin corrections at the face below `b`, and a Gauss-Legendre partial cell when
/// `b` is not a face. `b` defaults to the outer radius.
pub fn integrate_radial(grid: &RadialGrid, g: &[f64], origin_power: f64, upper: Option<f64>) -> f64 {
    let n = grid.cells();
    let h = grid.h();
    let b = upper.unwrap_or(grid.radius()).min(grid.radius()).max(0.0);
    let m = ((b / h) + 1e-9).floor() as usize;
    let m = m.min(n);
    let mut total: f64 = g[..m].iter().sum::<f64>() * h;

    if m >= ORIGIN_FIT {
        // Degree-7 interpolation keeps higher Taylor terms from leaking into S_0..S_3.
        let xs: Vec<f64> = (0..ORIGIN_FIT).map(|j| grid.node(j)).collect();
        let w = fornberg_weights(0.0, &xs, 3);
        let s: Vec<f64> = (0..ORIGIN_FIT).map(|j| g[j] / xs[j].powf(origin_power)).collect();
        let mut fact = 1.0;
        for (k, wk) in w.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            let sk: f64 = wk.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / fact;
            let e = origin_power + k as f64;
            let z = hurwitz_zeta_half(-e);
            if z != 0.0 {
                total -= z * sk * h.powf(e + 1.0);
            }
        }
    }

    if m >= 6 {
        let face = m as f64 * h;
        let lo = (m as isize - 3).max(0) as usize;
        let lo = lo.min(n.saturating_sub(6));
        let idx: Vec<usize> = (lo..lo + 6).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| grid.node(k)).collect();
        let w = fornberg_weights(face, &xs, 3);
        let d1: f64 = idx.iter().zip(&w[1]).map(|(&k, c)| c * g[k]).sum();
        let d3: f64 = idx.iter().zip(&w[3]).map(|(&k, c)| c * g[k]).sum();
        total += h * h / 24.0 * d1 - 7.0 * h.powi(4) / 5760.0 * d3;
    }

    let face = m as f64 * h;
    if b - face > 1e-12 * h && m < n {
        let lo = (m as isize - 3).max(0) as usize;
        let lo = lo.min(n.saturating_sub(6));
        let idx: Vec<usize> = (lo..lo + 6).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| grid.node(k)).collect();
        let (gx, gw) = gauss_legendre(4);
        let half = 0.5 * (b - face);
        for (x, wq) in gx.iter().zip(&gw) {
            let r = face + half * (x + 1.0);
            let c = fornberg_weights(r, &xs, 0);
            let val: f64 = idx.iter().zip(&c[0]).map(|(&k, ck)| ck * g[k]).sum();
            total += half * wq * val;
        }
    }
    total
}

/// `∫ w(r,t)² ρ(r) 4π r² dr` over the weight's support, for a density `ρ ~ r^{density_power}`.
pub fn integrate_density(
    grid: &RadialGrid,
    density: &[f64],
    density_power: f64,
    w: &WeightSpec,
    t: f64,
) -> f64 {
    let g: Vec<f64> = density
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let r = grid.node(j);
            let wv = w.eval(r, t);
            4.0 * PI * r * r * wv * wv * d
        })
        .collect();
    integrate_radial(grid, &g, 2.0 + 2.0 * w.r_power() + density_power, w.support())
}

/// `∫ w² f² 4π r² dr` for a radial profile `f`.
pub fn weighted_norm_sq(p: &RadialProfile, w: &WeightSpec, t: f64) -> f64 {
    let d: Vec<f64> = p.values().iter().map(|v| v * v).collect();
    integrate_density(p.grid(), &d, 0.0, w, t)
}

/// Product quadrature on the unit sphere normalized to average: weights sum to 1.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Gauss-Legendre in `cos θ` times the trapezoid rule in `φ`; exact for polynomials in
    /// `ω` of degree below `min(2 n_theta, n_phi)`.
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let (z, wz) = gauss_legendre(n_theta);
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                dirs.push([s * phi.cos(), s * phi.sin(), *zi]);
                weights.push(0.5 * wi / n_phi as f64);
            }
        }
        Self { dirs, weights }
    }

    /// 32 directions, exact through degree 7.
    pub fn standard() -> Self {
        Self::product(4, 8)
    }

    /// 128 directions, exact through degree 15.
    pub fn fine() -> Self {
        Self::product(8, 16)
    }

    /// Orbit representatives of the 26-point octahedral rule (exact through degree 7).
    ///
    /// Valid only for integrands invariant under coordinate permutations and sign flips,
    /// where each orbit contributes its representative's value times the orbit weight.
    pub fn octahedral_orbits() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let b = 1.0 / 3f64.sqrt();
        Self {
            dirs: vec![[1.0, 0.0, 0.0], [a, a, 0.0], [b, b, b]],
            weights: vec![6.0 / 21.0, 12.0 * 4.0 / 105.0, 8.0 * 9.0 / 280.0],
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Spherical average of `f`.
    pub fn average(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.dirs.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((zeta(0.5) + 1.4603545088095868).abs() < 1e-12);
        assert!((zeta(-0.5) + 0.2078862249773545).abs() < 1e-12);
        // ζ(-1, 1/2) = 1/24, ζ(-3, 1/2) = -7/960.
        assert!((hurwitz_zeta_half(-1.0) - 1.0 / 24.0).abs() < 1e-16);
        assert!((hurwitz_zeta_half(-3.0) + 7.0 / 960.0).abs() < 1e-16);
        assert_eq!(hurwitz_zeta_half(-2.0), 0.0);
        assert!((hurwitz_zeta_half(-1.0 + 1e-9) - 1.0 / 24.0).abs() < 1e-8);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rule_moments() {
        let q = SphereRule::standard();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((q.average(|w| w[0] * w[0]) - 1.0 / 3.0).abs() < 1e-14);
        assert!((q.average(|w| w[0].powi(2) * w[1].powi(2) * w[2].powi(2)) - 1.0 / 105.0).abs() < 1e-14);
    }

    #[test]
    fn octahedral_orbits_match_product_rule_on_symmetric_quartics() {
        let f = |w: &[f64; 3]| {
            w.iter().map(|v| v.powi(4)).sum::<f64>() + 3.0 * w.iter().map(|v| v.powi(6)).sum::<f64>()
        };
        let a = SphereRule::octahedral_orbits().average(f);
        let b = SphereRule::fine().average(f);
        assert!((a - b).abs() < 1e-14, "{a} {b}");
    }

    #[test]
    fn singular_origin_weight() {
        // ∫_0^5 r^{1/2} e^{-r} dr with a half-integer power at the origin.
        let g = RadialGrid::new(5.0, 100).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|r| r.sqrt() * (-r).exp()).collect();
        let exact = 0.8697731163038057; // lower incomplete gamma γ(3/2, 5)
        let got = integrate_radial(&g, &vals, 0.5, None);
        assert!((got - exact).abs() < 1e-8, "{got}");
    }

    #[test]
    fn interior_face_and_partial_cell() {
        let g = RadialGrid::new(4.0, 64).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|r| r.cos()).collect();
        assert!((integrate_radial(&g, &vals, 0.0, Some(2.0)) - 2f64.sin()).abs() < 1e-10);
        assert!((integrate_radial(&g, &vals, 0.0, Some(1.03)) - 1.03f64.sin()).abs() < 1e-10);
    }
}
