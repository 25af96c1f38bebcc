//! Simulation and verification toolkit for radially symmetric nonlinear elastic waves.
//!
//! Radial displacements `u(t,x) = x ψ(t,|x|)` reduce the elastic system with `c1 = 1` to a
//! scalar wave equation for `ψ`, with a quadratic nonlinearity `N(u,u)` in divergence form.
//! The crate builds that nonlinearity from the cubic material constants, evolves `ψ` with
//! fourth-order finite differences and RK4, evaluates the vector-field energies along a run,
//! and checks the weighted inequalities and multiplier identities used in the small-data
//! theory.

pub mod energies;
pub mod error;
pub mod nullform;
pub mod radialfield;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
