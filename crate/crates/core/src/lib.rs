//! Solver kernel for time-harmonic exterior scattering problems reduced to an
//! annular (or disc-shaped) computational domain by a Robin-type artificial
//! boundary condition built from layer potentials.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] — Gauss–Legendre line rules and symmetric triangle rules.
//! * [`specfun`] — Bessel/Hankel functions and radial derivatives of the
//!   outgoing Hankel kernel.
//! * [`curves`] — the parametric boundary curves, their quadratures and
//!   geometric predicates (separation, containment).
//! * [`kernels`] — fundamental solutions and their traction derivatives for
//!   the four supported operators.
//! * [`mesh`] — conforming triangulations of the annulus/disc, uniform
//!   refinement with boundary projection, plain-text import/export.
//! * [`assembly`] — P1 Galerkin assembly of the interior form, the dense
//!   artificial-boundary coupling blocks, loads and nullspace constraints.
//! * [`solve`] — direct factorization of the combined system and error norms
//!   against manufactured exact solutions.

pub mod assembly;
pub mod curves;
pub mod kernels;
pub mod mesh;
pub mod quadrature;
pub mod solve;
pub mod specfun;

pub use num_complex::Complex64;

/// Shorthand used throughout for 2D points and vectors.
pub type Point2 = [f64; 2];

/// Complex field value with up to two components (second is zero for scalar
/// operators).
pub type FieldValue = [Complex64; 2];

/// Complex 2x2 matrix; scalar kernels populate only entry `[0][0]`.
pub type KernelMatrix = [[Complex64; 2]; 2];

pub(crate) fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}
