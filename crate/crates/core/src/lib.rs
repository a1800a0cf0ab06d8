//! Convex-affine toolkit for toric extremal (almost) Kähler geometry.
//!
//! The crate works entirely on the moment-polytope side: labelled simple
//! polytopes, their boundary measures, the extremal affine function, the
//! Donaldson functional and Futaki invariants, crease-function stability
//! scans, and symmetric-matrix fields solving (or approximately solving) the
//! Abreu equation `S(H) = zeta`.

pub mod error;
pub mod extremal;
mod linalg;
pub mod metrics;
pub mod polynomial;
pub mod polytope;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
pub use polynomial::Polynomial;
pub use polytope::{BoundaryMeasure, Halfspace, LabelledPolytope, Lattice, PolytopeSpec, Simplex};
