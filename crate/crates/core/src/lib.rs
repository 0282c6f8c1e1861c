//! Spectral solver for the axisymmetric equilibria of the liquid drop
//! functional `I[E] = Per E + D[E]` that bifurcate from the ball at volume 10.
//!
//! Shapes are star-shaped graphs `φ(t) = R + Σ c_ℓ P_ℓ(t)` over the sphere,
//! `t = cos θ`, with even Legendre degrees only. The Coulomb potential on the
//! surface is computed by an azimuthal elliptic-integral reduction; the
//! equilibrium equation `F(φ) = μ` is solved by Newton continuation in the
//! amplitude `s` of the `P₂` mode.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod coulomb;
pub mod error;
pub mod expansions;
pub mod modes;
pub mod operator;
pub mod shape;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use modes::ModeVector;
pub use shape::{EnergyReport, GridField, Shape};
pub use specfun::{GaussGrid, LegendreTable};
