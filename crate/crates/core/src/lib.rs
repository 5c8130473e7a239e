//! Invariant Lagrangians for invariant second-order systems on Lie groups.
//!
//! Everything here works on the Lie algebra `g` of the group: a reduced
//! vector field `gamma` on `g` is given together with the structure constants,
//! and the crate decides whether `gamma` comes from a regular Lagrangian `l`
//! on `g` via the Euler–Poincaré equations.
//!
//! The pipeline is:
//!
//! 1. [`redgeom`] computes the reduced connection `lambda`, the tensor `psi`
//!    and the Jacobi endomorphism `phi` from `gamma`;
//! 2. [`helmholtz`] checks or solves the reduced Helmholtz conditions for a
//!    multiplier matrix `k`;
//! 3. [`obstruct`] extracts the Lie algebra cochains `nu` and `mu` from a
//!    candidate `l`, checks that they are cocycles, and removes a coboundary
//!    `mu` by shifting `l` with a linear term;
//! 4. [`epdyn`] integrates the resulting dynamics and reconstructs curves in a
//!    matrix group.
//!
//! Symbolic work goes through [`expr`], exact linear algebra through
//! [`exactlin`], and Lie algebra data and cohomology through [`liealg`].

#![allow(clippy::needless_range_loop)]

pub mod epdyn;
pub mod exactlin;
pub mod expr;
pub mod helmholtz;
pub mod liealg;
pub mod obstruct;
pub mod rational;
pub mod redgeom;

pub use expr::{Expr, Params, Poly, Region, ZeroVerdict};
pub use liealg::LieAlgebra;
pub use rational::Rational;
pub use redgeom::ReducedSode;

/// Re-exported for matrix representations.
pub use nalgebra;
