use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum cell count for the five-point stencils and their outer closures.
pub const MIN_CELLS: usize = 8;

/// Uniform cell-centered grid on `[0, R]` with nodes `r_j = (j + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::GridTooSmall { cells, min: MIN_CELLS });
        }
        Ok(Self { radius, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.radius / self.cells as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.node(j)).collect()
    }

    /// Same radius with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self { radius: self.radius, cells: self.cells * factor }
    }
}

/// Real values at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: (0..grid.cells()).map(|j| f(grid.node(j))).collect() }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Two-column text `r value`, one node per line.
    pub fn to_two_column(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 48);
        for (j, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{:.17e} {:.17e}\n", self.grid.node(j), v));
        }
        s
    }

    /// Parses two-column text produced for a grid of the given radius.
    pub fn from_two_column(radius: f64, text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut cols = line.split_whitespace();
            let v = cols
                .nth(1)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidGrid(format!("line {}: expected `r value`", n + 1)))?;
            values.push(v);
        }
        let grid = RadialGrid::new(radius, values.len())?;
        Self::new(grid, values)
    }
}

/// Radial state `(ψ, ∂_t ψ)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub psi: RadialProfile,
    pub psidot: RadialProfile,
    pub t: f64,
}

impl StateVector {
    pub fn new(psi: RadialProfile, psidot: RadialProfile, t: f64) -> Result<Self> {
        if psi.grid() != psidot.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { psi, psidot, t })
    }

    pub fn zeros(grid: RadialGrid, t: f64) -> Self {
        Self { psi: RadialProfile::zeros(grid), psidot: RadialProfile::zeros(grid), t }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.psi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.psidot.is_finite()
    }

    /// Largest `|ψ|`, `|ψ̇|` over the outermost 5% of cells.
    pub fn edge_magnitude(&self) -> f64 {
        let n = self.grid().cells();
        let start = n - (n / 20).max(1);
        self.psi.values()[start..]
            .iter()
            .chain(&self.psidot.values()[start..])
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_avoid_origin() {
        let g = RadialGrid::new(2.0, 8).unwrap();
        assert_eq!(g.node(0), 0.125);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn small_grid_rejected() {
        assert_eq!(RadialGrid::new(1.0, 4), Err(Error::GridTooSmall { cells: 4, min: 8 }));
    }

    #[test]
    fn two_column_roundtrip() {
        let g = RadialGrid::new(3.0, 16).unwrap();
        let p = RadialProfile::from_fn(g, |r| (-r * r).exp());
        assert_eq!(RadialProfile::from_two_column(3.0, &p.to_two_column()).unwrap(), p);
    }
}
