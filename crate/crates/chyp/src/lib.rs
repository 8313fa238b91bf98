//! Numerical geometry of the complex hyperbolic plane.
//!
//! The crate is organised bottom-up:
//!
//! * [`cproj`] projective models, Hermitian forms, the Cayley transform and
//!   isometry classification;
//! * [`heis`] Heisenberg coordinates, Cygan metrics and isometric spheres;
//! * [`ellip`] elliptic normal forms and the standard fixed torus;
//! * [`isect`] intersections of the standard family of isometric spheres;
//! * [`fordcell`] the combinatorial Ford cell complex and a Monte-Carlo probe;
//! * [`trigroup`] complex hyperbolic `(n,∞,∞)`-triangle groups and their
//!   discreteness certificates.
//!
//! Matrices and vectors are `nalgebra` types over [`C64`]. All operations are
//! pure functions of their arguments.

pub mod cproj;
pub mod ellip;
pub mod fordcell;
pub mod heis;
pub mod isect;
pub mod trigroup;

mod error;
mod linalg;
mod poly;

pub use error::{Error, Result};
pub use linalg::{C64, Mat3, Vec3};

/// Default tolerance on dimensionless residuals.
pub const DEFAULT_TOL: f64 = 1e-9;
