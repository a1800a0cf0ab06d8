use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("feasible set is empty or unbounded")]
    UnboundedOrEmpty,
    #[error("vertex {vertex:?} lies on {facets} facets (polytope is not simple)")]
    NotSimple { vertex: Vec<f64>, facets: usize },
    #[error("halfspace {0} does not support a facet")]
    RedundantFacet(usize),
    #[error("label of facet {facet} is not a lattice vector (coordinates {coords:?})")]
    NonIntegralLabel { facet: usize, coords: Vec<f64> },
    #[error("labelled polytopes do not match: {0}")]
    MismatchedPolytopes(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("adaptive quadrature did not converge: error estimate {estimate:e} > tolerance {tol:e}")]
    NonConvergence { estimate: f64, tol: f64 },
    #[error("Gram matrix is singular")]
    SingularGram,
    #[error("Futaki matrix has rank {rank} < {dim}")]
    RankDeficient { rank: usize, dim: usize },
    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),
    #[error("evaluation point is on or outside the boundary (facet {facet}, value {value:e})")]
    BoundaryEvaluation { facet: usize, value: f64 },
    #[error("Hessian is singular at {point:?} (min eigenvalue {min_eig:e})")]
    SingularHessian { point: Vec<f64>, min_eig: f64 },
    #[error("finite-difference step underflow at {0:?}: point too close to the boundary")]
    StepUnderflow(Vec<f64>),
    #[error("invalid interval [{0}, {1}] or non-positive boundary labels")]
    InvalidInterval(f64, f64),
    #[error("normal equations are ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("maximum iterations reached")]
    MaxIterReached,
}

pub type Result<T> = std::result::Result<T, Error>;
