use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certify::{check_boundary, relabel, BoundaryCert};
use super::field::{MatrixField, PolySym2};
use crate::error::{Error, Result};
use crate::extremal::extremal_affine;
use crate::polynomial::{multi_indices, Polynomial};
use crate::polytope::{BoundaryMeasure, LabelledPolytope, Simplex};
use crate::quadrature::{kuhn_children, SimplexRule};

pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormalOptions {
    /// Total degree of the entries of `Q`.
    pub degree: u32,
    /// Kuhn refinements of the triangulation used for the least-squares rule.
    pub refinements: usize,
    /// Gauss points per direction of the collapsed rule on each cell.
    pub points: usize,
}

impl FormalOptions {
    pub fn new(dim: usize, degree: u32) -> Self {
        let refinements = match dim {
            1 => 4,
            2 => 2,
            _ => 1,
        };
        Self { degree, refinements, points: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct FormalSolution {
    /// `H = H_G + b² Q`.
    pub field: MatrixField,
    /// `Q`, with the basis coefficients in `coefficients`.
    pub q: PolySym2,
    pub coefficients: Vec<f64>,
    /// `‖S(H) - ζ‖_{L²(P)}` on the least-squares rule.
    pub residual: f64,
    /// Of the Jacobi-scaled normal matrix.
    pub condition_number: f64,
    pub boundary: BoundaryCert,
    /// The polytope with labels matching `σ`; `H_G` is its Guillemin field.
    pub polytope: LabelledPolytope,
}

/// Quadrature nodes and weights on a refined triangulation.
fn rule_points(p: &LabelledPolytope, opts: &FormalOptions) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = p.dim();
    let kids = kuhn_children(k);
    let mut cells: Vec<Simplex> = p.triangulate().to_vec();
    for _ in 0..opts.refinements {
        cells = cells
            .iter()
            .flat_map(|c| kids.iter().map(|corners| Simplex::new(corners.iter().map(|b| c.at(b)).collect())))
            .collect();
    }
    let rule = SimplexRule::collapsed(k, opts.points);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for c in &cells {
        let m = c.measure();
        for (b, w) in rule.bary.iter().zip(&rule.weights) {
            pts.push(c.at(b));
            wts.push(w * m);
        }
    }
    (pts, wts)
}

/// Least-squares formal solution of `S(H) = ζ` with `H = H_G + b² Q`,
/// `b = Π ℓ_s`, and `Q` symmetric with polynomial entries of degree `<= degree`.
pub fn formal_solve(p: &LabelledPolytope, sigma: &BoundaryMeasure, degree: u32) -> Result<FormalSolution> {
    formal_solve_with(p, sigma, &FormalOptions::new(p.dim(), degree))
}

pub fn formal_solve_with(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    opts: &FormalOptions,
) -> Result<FormalSolution> {
    let n = p.dim();
    let pl = relabel(p, sigma)?;
    let guillemin = MatrixField::guillemin(&pl);
    let zeta = extremal_affine(&pl, sigma)?;

    let mut b = Polynomial::constant(n, 1.0);
    for h in pl.halfspaces() {
        b = &b * &Polynomial::affine(h.offset, &h.normal);
    }
    let b2 = &b * &b;

    // basis: (i, j, α) ↦ the field with b² x^α in entries (i, j) and (j, i)
    let mut basis: Vec<(usize, usize, Vec<u32>)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            for e in multi_indices(n, opts.degree) {
                basis.push((i, j, e));
            }
        }
    }
    let images: Vec<Polynomial> = basis
        .iter()
        .map(|(i, j, e)| {
            let entry = &b2 * &Polynomial::monomial(n, e.clone(), 1.0);
            let mult = if i == j { 1.0 } else { 2.0 };
            entry.derivative(*i).derivative(*j).scale(-mult)
        })
        .collect();

    let (pts, wts) = rule_points(&pl, opts);
    let rows: Vec<(Vec<f64>, f64)> = pts
        .par_iter()
        .map(|x| {
            let phi: Vec<f64> = images.iter().map(|q| q.eval(x)).collect();
            let r = guillemin.abreu(x).map(|s| zeta.eval(x) - s);
            r.map(|r| (phi, r))
        })
        .collect::<Result<_>>()?;

    let m = basis.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for ((phi, r), w) in rows.iter().zip(&wts) {
        for i in 0..m {
            rhs[i] += w * phi[i] * r;
            for j in i..m {
                a[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    let d = DVector::from_iterator(m, (0..m).map(|i| if a[(i, i)] > 0.0 { 1.0 / a[(i, i)].sqrt() } else { 0.0 }));
    if d.iter().any(|&v| v == 0.0) {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let scaled = DMatrix::from_fn(m, m, |i, j| a[(i, j)] * d[i] * d[j]);
    let eig = scaled.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition_number > MAX_CONDITION {
        return Err(Error::IllConditioned(condition_number));
    }
    let chol = scaled.cholesky().ok_or(Error::IllConditioned(condition_number))?;
    let y = chol.solve(&DVector::from_fn(m, |i, _| rhs[i] * d[i]));
    let coefficients: Vec<f64> = (0..m).map(|i| y[i] * d[i]).collect();

    let mut sq = 0.0;
    for ((phi, r), w) in rows.iter().zip(&wts) {
        let fit: f64 = phi.iter().zip(&coefficients).map(|(p, c)| p * c).sum();
        sq += w * (fit - r) * (fit - r);
    }
    let residual = sq.sqrt();

    let mut q = PolySym2::zero(n);
    for ((i, j, e), c) in basis.iter().zip(&coefficients) {
        let entry = q.entry_mut(*i, *j);
        *entry = &*entry + &Polynomial::monomial(n, e.clone(), *c);
    }
    let field = MatrixField::Combination(vec![(1.0, guillemin), (1.0, MatrixField::Polynomial(q.mul_scalar(&b2)))]);
    let boundary = check_boundary(&field, &pl, sigma);
    Ok(FormalSolution { field, q, coefficients, residual, condition_number, boundary, polytope: pl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::solve1d::solve_extremal_1d;
    use crate::polytope::shapes::*;

    fn sup_error(sol: &FormalSolution, exact: &dyn Fn(f64) -> f64) -> f64 {
        (0..=1000)
            .map(|k| {
                let x = k as f64 / 1000.0;
                (sol.field.eval(&[x]).unwrap()[(0, 0)] - exact(x)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn interval_unit_labels() {
        let p = interval(0.0, 1.0, 1.0, 1.0);
        let sol = formal_solve(&p, &p.boundary_measure(), 1).unwrap();
        assert!(sol.residual <= 1e-8);
        assert!(sup_error(&sol, &|x| 2.0 * x * (1.0 - x)) < 1e-7);
        assert!(sol.boundary.pass);
    }

    #[test]
    fn interval_recovers_cubic() {
        let p = interval(0.0, 1.0, 1.0, 2.0);
        let exact = solve_extremal_1d(0.0, 1.0, 1.0, 2.0).unwrap();
        let mut last = f64::INFINITY;
        for degree in [3, 5, 6] {
            let sol = formal_solve(&p, &p.boundary_measure(), degree).unwrap();
            let err = sup_error(&sol, &|x| exact.eval(x));
            assert!(sol.residual <= last);
            last = sol.residual;
            if degree >= 5 {
                assert!(err < 1e-6, "degree {degree}: {err}");
            }
        }
    }

    #[test]
    fn square_residuals() {
        let p = unit_square();
        let sol = formal_solve(&p, &p.boundary_measure(), 2).unwrap();
        assert!(sol.residual <= 1e-6);
        assert!(sol.boundary.pass);
    }

    #[test]
    fn ill_conditioned_is_reported() {
        let p = interval(0.0, 1.0, 1.0, 2.0);
        assert!(matches!(formal_solve(&p, &p.boundary_measure(), 30), Err(Error::IllConditioned(_))));
    }
}
