//! Radial profiles `ψ(t,r)` on a cell-centered grid and their lift to vector fields
//! `u(t,x) = x ψ(t,|x|)`.
//!
//! Profiles are implicitly even across the origin. Derivatives use fourth-order centered
//! stencils with ghost values mirrored through `r = 0`; integrals over `ℝ³` use a midpoint rule
//! with origin corrections for weights singular at `r = 0`.

mod grid;
mod lift;
mod quadrature;
mod stencil;
mod weight;

pub use grid::{RadialGrid, RadialProfile, StateVector};
pub use lift::{apply_scaling, lift_radial, lift_to_jet, lift_to_jet_at, LiftedField, ScaledPair};
pub use quadrature::{
    fornberg_weights, gauss_legendre, hurwitz_zeta_half, integrate_density, integrate_radial,
    weighted_norm_sq, SphereRule,
};
pub use stencil::{derivative_stack, differentiate, differentiate_with, OuterClosure};
pub use weight::{jbracket, WeightSpec};
