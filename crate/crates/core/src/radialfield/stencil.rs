use super::grid::{RadialGrid, RadialProfile};
use super::quadrature::fornberg_weights;
use crate::error::{Error, Result};

/// Treatment of the two outermost nodes, where the centered stencil reaches past `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterClosure {
    /// Fourth-order one-sided stencils built from interior nodes.
    OneSided,
    /// Values beyond `R` are taken to be zero.
    ZeroExtension,
}

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Ghost-aware read: even reflection through the origin, closure-dependent past `R`.
#[inline]
fn at(v: &[f64], j: isize) -> f64 {
    if j < 0 {
        v[(-1 - j) as usize]
    } else if (j as usize) < v.len() {
        v[j as usize]
    } else {
        0.0
    }
}

/// Applies the first (`order = 1`) or second (`order = 2`) derivative stencil to raw values.
pub fn differentiate_with(
    grid: &RadialGrid,
    v: &[f64],
    order: usize,
    closure: OuterClosure,
) -> Result<Vec<f64>> {
    let n = grid.cells();
    if v.len() != n {
        return Err(Error::GridMismatch);
    }
    let h = grid.h();
    let (c, scale) = match order {
        1 => (D1, 1.0 / (12.0 * h)),
        2 => (D2, 1.0 / (12.0 * h * h)),
        _ => return Err(Error::BadOrder(order)),
    };
    let mut out = vec![0.0; n];
    for j in 0..n {
        let ji = j as isize;
        out[j] = scale
            * (c[0] * at(v, ji - 2)
                + c[1] * at(v, ji - 1)
                + c[2] * v[j]
                + c[3] * at(v, ji + 1)
                + c[4] * at(v, ji + 2));
    }
    if closure == OuterClosure::OneSided {
        let width = order + 4;
        let idx: Vec<usize> = (n - width..n).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| grid.node(k)).collect();
        for j in n - 2..n {
            let w = fornberg_weights(grid.node(j), &xs, order);
            out[j] = idx.iter().zip(&w[order]).map(|(&k, wk)| wk * v[k]).sum();
        }
    }
    Ok(out)
}

/// Fourth-order derivative of an even profile with one-sided outer closure.
pub fn differentiate(p: &RadialProfile, order: usize) -> Result<RadialProfile> {
    let d = differentiate_with(p.grid(), p.values(), order, OuterClosure::OneSided)?;
    RadialProfile::new(*p.grid(), d)
}

/// `[f, f', f'', f''', f'''']` up to `max_order ≤ 4` for an even profile.
///
/// Odd-order derivatives come from applying the first-derivative stencil to an even profile
/// (`f` or `f''`), so the origin mirror is always applied to even data.
pub fn derivative_stack(
    grid: &RadialGrid,
    v: &[f64],
    max_order: usize,
    closure: OuterClosure,
) -> Result<Vec<Vec<f64>>> {
    if max_order > 4 {
        return Err(Error::BadOrder(max_order));
    }
    let mut out = vec![v.to_vec()];
    if max_order >= 1 {
        out.push(differentiate_with(grid, v, 1, closure)?);
    }
    if max_order >= 2 {
        out.push(differentiate_with(grid, v, 2, closure)?);
    }
    if max_order >= 3 {
        let d2 = out[2].clone();
        out.push(differentiate_with(grid, &d2, 1, closure)?);
        if max_order >= 4 {
            out.push(differentiate_with(grid, &d2, 2, closure)?);
        }
    }
    Ok(out)
}
