//! Symplectic potentials and symmetric-matrix fields on labelled polytopes.
//!
//! A field `H: P̄ → Sym²` is an (almost) Kähler toric metric when it is smooth,
//! satisfies the boundary conditions
//! `H(n_s, ·) = 0` and `dH(n_s, n_s) = 2 n_s` on each facet, and is positive
//! definite on the interior of every face. Its scalar curvature is the Abreu
//! operator `S(H) = -Σ ∂_i ∂_j H_ij`.

pub mod certify;
pub mod combine;
pub mod energy;
pub mod export;
pub mod field;
pub mod formal;
pub mod potential;
pub mod solve1d;

pub use certify::{
    check_boundary, check_boundary_with, check_positivity, parts_identity_check, BoundaryCert, FacetCert,
    PositivityReport, TOL_BC, TOL_PD,
};
pub use combine::{convex_combine, linearity_in_sigma};
pub use energy::{mabuchi_energy, n_functional};
pub use export::{sample_field, write_field_csv, FieldSample};
pub use field::{FieldKind, MatrixField, PolySym2, SampledField};
pub use formal::{formal_solve, formal_solve_with, FormalOptions, FormalSolution};
pub use potential::{guillemin_hessian, SymplecticPotential};
pub use solve1d::{solve_extremal_1d, Extremal1d};
