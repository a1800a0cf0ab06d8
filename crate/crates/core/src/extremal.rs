//! Affine invariants of a labelled polytope: the extremal affine function,
//! the Donaldson functional, Futaki and log-Futaki invariants, and the cone of
//! labellings with vanishing Futaki invariant.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::null_space;
use crate::polynomial::Polynomial;
use crate::polytope::{BoundaryMeasure, LabelledPolytope};
use crate::quadrature::{
    integrate_fn_boundary, integrate_fn_bulk, integrate_poly_boundary, integrate_poly_bulk, integrate_poly_facet,
    moments, AdaptiveOptions,
};
use crate::stability::{l_pl, PLConvexFunction};

/// `x ↦ constant + <gradient, x>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub constant: f64,
    pub gradient: Vec<f64>,
}

impl AffineFunction {
    pub fn new(constant: f64, gradient: Vec<f64>) -> Self {
        Self { constant, gradient }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(0.0, vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>()
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::affine(self.constant, &self.gradient)
    }

    pub fn sub(&self, other: &AffineFunction) -> AffineFunction {
        AffineFunction::new(
            self.constant - other.constant,
            self.gradient.iter().zip(&other.gradient).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn add(&self, other: &AffineFunction) -> AffineFunction {
        self.sub(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> AffineFunction {
        AffineFunction::new(self.constant * s, self.gradient.iter().map(|g| g * s).collect())
    }

    /// The basis `{1, x_1, ..., x_n}`.
    pub fn basis(dim: usize) -> Vec<AffineFunction> {
        let mut out = vec![AffineFunction::new(1.0, vec![0.0; dim])];
        for i in 0..dim {
            let mut g = vec![0.0; dim];
            g[i] = 1.0;
            out.push(AffineFunction::new(0.0, g));
        }
        out
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.gradient.iter().all(|g| g.abs() <= tol * (1.0 + self.constant.abs()))
    }
}

/// The unique affine `ζ` with `∫_P ζ f dx = 2 ∫_{∂P} f σ` for every affine `f`.
pub fn extremal_affine(p: &LabelledPolytope, sigma: &BoundaryMeasure) -> Result<AffineFunction> {
    let n = p.dim();
    let m = moments(p, sigma, 2);
    let idx = |e: &[u32]| m.exponents.iter().position(|x| x == e).unwrap();
    let unit = |i: Option<usize>| -> Vec<u32> {
        let mut e = vec![0u32; n];
        if let Some(i) = i {
            e[i] += 1;
        }
        e
    };
    let basis: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let gram = DMatrix::from_fn(n + 1, n + 1, |a, b| {
        let mut e = unit(basis[a]);
        if let Some(j) = basis[b] {
            e[j] += 1;
        }
        m.bulk[idx(&e)]
    });
    let rhs = DVector::from_fn(n + 1, |a, _| 2.0 * m.boundary[idx(&unit(basis[a]))]);
    let chol = gram.cholesky().ok_or(Error::SingularGram)?;
    let c = chol.solve(&rhs);
    Ok(AffineFunction::new(c[0], c.iter().skip(1).copied().collect()))
}

/// Argument of the Donaldson functional.
#[derive(Clone, Copy, Debug)]
pub enum TestFunction<'a> {
    Affine(&'a AffineFunction),
    Polynomial(&'a Polynomial),
    PiecewiseLinear(&'a PLConvexFunction),
}

/// `L(f) = ∫_{∂P} f σ - ½ ∫_P f ζ dx`, exact for the supported test functions.
pub fn donaldson_l(p: &LabelledPolytope, sigma: &BoundaryMeasure, f: TestFunction<'_>) -> Result<f64> {
    let zeta = extremal_affine(p, sigma)?;
    match f {
        TestFunction::Affine(a) => donaldson_l_poly(p, sigma, &zeta, &a.to_polynomial()),
        TestFunction::Polynomial(q) => donaldson_l_poly(p, sigma, &zeta, q),
        TestFunction::PiecewiseLinear(pl) => l_pl(p, sigma, pl),
    }
}

pub(crate) fn donaldson_l_poly(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    zeta: &AffineFunction,
    q: &Polynomial,
) -> Result<f64> {
    let boundary = integrate_poly_boundary(p, sigma, q, None)?.value;
    let bulk = integrate_poly_bulk(p, &(q * &zeta.to_polynomial()))?.value;
    Ok(boundary - 0.5 * bulk)
}

/// `L(g)` for a general continuous `g` on the closed polytope (adaptive quadrature).
pub fn donaldson_l_fn(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    opts: &AdaptiveOptions,
) -> Result<f64> {
    let zeta = extremal_affine(p, sigma)?;
    let boundary = integrate_fn_boundary(p, sigma, g, opts)?.value;
    let bulk = integrate_fn_bulk(p, &|x: &[f64]| g(x) * zeta.eval(x), opts)?.value;
    Ok(boundary - 0.5 * bulk)
}

/// `Fut(f) = ∫_{∂P} f σ ∫_P dx - ∫_P f dx ∫_{∂P} σ` with `σ` from the labels of `p`.
pub fn futaki(p: &LabelledPolytope, f: &AffineFunction) -> f64 {
    futaki_poly(p, &f.to_polynomial()).expect("dimension matches")
}

/// Same expression for an arbitrary polynomial integrand.
pub fn futaki_poly(p: &LabelledPolytope, q: &Polynomial) -> Result<f64> {
    let sigma = p.boundary_measure();
    let one = Polynomial::constant(p.dim(), 1.0);
    let vol = integrate_poly_bulk(p, &one)?.value;
    let per = integrate_poly_boundary(p, &sigma, &one, None)?.value;
    let fb = integrate_poly_boundary(p, &sigma, q, None)?.value;
    let fv = integrate_poly_bulk(p, q)?.value;
    Ok(fb * vol - fv * per)
}

/// The Futaki invariant as a linear form, stored by its values on `{1, x_1, ..., x_n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FutakiForm {
    pub values: Vec<f64>,
}

impl FutakiForm {
    pub fn eval(&self, f: &AffineFunction) -> f64 {
        self.values[0] * f.constant + f.gradient.iter().zip(&self.values[1..]).map(|(g, v)| g * v).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

pub fn futaki_form(p: &LabelledPolytope) -> FutakiForm {
    FutakiForm { values: AffineFunction::basis(p.dim()).iter().map(|f| futaki(p, f)).collect() }
}

/// `∫_{∂P} x σ / ∫_{∂P} σ`.
pub fn boundary_barycenter(p: &LabelledPolytope, sigma: &BoundaryMeasure) -> Vec<f64> {
    let n = p.dim();
    let per = integrate_poly_boundary(p, sigma, &Polynomial::constant(n, 1.0), None).unwrap().value;
    (0..n).map(|i| integrate_poly_boundary(p, sigma, &Polynomial::variable(n, i), None).unwrap().value / per).collect()
}

/// Label rescalings `a` (with `n_s = η_s / a_s`) whose Futaki form vanishes.
#[derive(Clone, Debug, Serialize)]
pub struct FutakiCone {
    /// Translation applied so that `∫_P x dx = 0`; this is the `dx`-barycenter.
    pub centering: Vec<f64>,
    /// `M[i][s] = ∫_{F_s} (x_i - centering_i) dσ_η`.
    pub matrix: Vec<Vec<f64>>,
    pub rank: usize,
    pub kernel_dim: usize,
    /// Orthonormal basis of `ker M`.
    pub kernel_basis: Vec<Vec<f64>>,
    /// A point of `ker M` with every component `>= 1`.
    pub interior_point: Vec<f64>,
}

impl FutakiCone {
    /// The labelling `η_s / a_s` for the interior point `a`.
    pub fn rescaled(&self, reference: &LabelledPolytope) -> Result<LabelledPolytope> {
        let inv: Vec<f64> = self.interior_point.iter().map(|a| 1.0 / a).collect();
        reference.rescale_labels(&inv)
    }
}

pub fn futaki_cone(reference: &LabelledPolytope) -> Result<FutakiCone> {
    let n = reference.dim();
    let d = reference.num_facets();
    let sigma = reference.boundary_measure();
    let centering = reference.barycenter();
    let mut m = DMatrix::zeros(n, d);
    for s in 0..d {
        for i in 0..n {
            let q = Polynomial::affine(-centering[i], &unit(n, i));
            m[(i, s)] = sigma.weight(s) * integrate_poly_facet(reference, s, &q)?;
        }
    }
    let (rank, kernel) = null_space(&m, 1e-10);
    if rank < n {
        return Err(Error::RankDeficient { rank, dim: n });
    }

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..d).map(|_| lp.add_var(1.0, (1.0, f64::INFINITY))).collect();
    for i in 0..n {
        let mut expr = LinearExpr::empty();
        for (s, &v) in vars.iter().enumerate() {
            expr.add(v, m[(i, s)]);
        }
        lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
    }
    let sol = lp.solve().map_err(|e| Error::LpInfeasible(format!("{e}; M = {m}")))?;
    let a = DVector::from_iterator(d, vars.iter().map(|&v| sol[v]));
    // remove the LP's residual component outside the kernel
    let projected = &kernel * (kernel.transpose() * &a);
    if projected.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::LpInfeasible(format!("projected point {projected} is not positive")));
    }
    Ok(FutakiCone {
        centering,
        matrix: (0..n).map(|i| (0..d).map(|s| m[(i, s)]).collect()).collect(),
        rank,
        kernel_dim: kernel.ncols(),
        kernel_basis: (0..kernel.ncols()).map(|c| kernel.column(c).iter().copied().collect()).collect(),
        interior_point: projected.iter().copied().collect(),
    })
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Futaki invariant of the labelling `m_s / a_s`, evaluated through the
/// reference measure of `reference` (labels `m`): linear in `a`.
pub fn log_futaki(reference: &LabelledPolytope, a: &[f64], f: &AffineFunction) -> Result<f64> {
    if a.len() != reference.num_facets() || a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("need one positive scalar per facet".into()));
    }
    let n = reference.dim();
    let sigma = reference.boundary_measure();
    let q = f.to_polynomial();
    let one = Polynomial::constant(n, 1.0);
    let vol = integrate_poly_bulk(reference, &one)?.value;
    let fv = integrate_poly_bulk(reference, &q)?.value;
    let mut fb = 0.0;
    let mut per = 0.0;
    for (s, &as_) in a.iter().enumerate() {
        fb += as_ * sigma.weight(s) * integrate_poly_facet(reference, s, &q)?;
        per += as_ * sigma.weight(s) * integrate_poly_facet(reference, s, &one)?;
    }
    Ok(vol * fb - fv * per)
}

/// Measured relation between the Futaki invariant and `L` when `ζ` is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FutakiLRelation {
    pub zeta_constant: bool,
    pub volume: f64,
    /// `Fut(q) / L(q)` for the non-affine probe `q = |x - b|^2`; `None` unless `ζ` is constant.
    pub measured_constant: Option<f64>,
    /// `max |Fut(f) - vol · L(f)|` over the affine basis.
    pub affine_residual: f64,
}

pub fn futaki_l_relation(p: &LabelledPolytope) -> Result<FutakiLRelation> {
    let n = p.dim();
    let sigma = p.boundary_measure();
    let zeta = extremal_affine(p, &sigma)?;
    let volume = integrate_poly_bulk(p, &Polynomial::constant(n, 1.0))?.value;
    let mut affine_residual: f64 = 0.0;
    for f in AffineFunction::basis(n) {
        let l = donaldson_l_poly(p, &sigma, &zeta, &f.to_polynomial())?;
        affine_residual = affine_residual.max((futaki(p, &f) - volume * l).abs());
    }
    let zeta_constant = zeta.is_constant(1e-10);
    let measured_constant = if zeta_constant {
        let b = p.barycenter();
        let mut probe = Polynomial::zero(n);
        for (i, bi) in b.iter().enumerate() {
            let c = Polynomial::affine(-bi, &unit(n, i));
            probe = &probe + &(&c * &c);
        }
        let fut = futaki_poly(p, &probe)?;
        let l = donaldson_l_poly(p, &sigma, &zeta, &probe)?;
        Some(fut / l)
    } else {
        None
    };
    Ok(FutakiLRelation { zeta_constant, volume, measured_constant, affine_residual })
}
