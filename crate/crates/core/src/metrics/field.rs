use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::potential::SymplecticPotential;
use crate::error::{Error, Result};
use crate::linalg::{norm, orthogonal_complement, sub};
use crate::polynomial::Polynomial;
use crate::polytope::LabelledPolytope;

/// A symmetric matrix of polynomials, stored by its upper triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySym2 {
    dim: usize,
    /// row-major upper triangle: (0,0), (0,1), ..., (0,n-1), (1,1), ...
    entries: Vec<Polynomial>,
}

impl PolySym2 {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: vec![Polynomial::zero(dim); dim * (dim + 1) / 2] }
    }

    /// Builds from a full matrix of polynomials; the lower triangle must mirror the upper one.
    pub fn from_rows(rows: Vec<Vec<Polynomial>>) -> Result<Self> {
        let n = rows.len();
        let mut out = Self::zero(n);
        for i in 0..n {
            if rows[i].len() != n {
                return Err(Error::InvalidInput("matrix of polynomials must be square".into()));
            }
            for j in 0..n {
                if rows[i][j].dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: rows[i][j].dim() });
                }
                if j > i && rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidInput(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
            for j in i..n {
                *out.entry_mut(i, j) = rows[i][j].clone();
            }
        }
        Ok(out)
    }

    pub fn diagonal(diag: Vec<Polynomial>) -> Self {
        let n = diag.len();
        let mut out = Self::zero(n);
        for (i, d) in diag.into_iter().enumerate() {
            *out.entry_mut(i, i) = d;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[self.index(i, j)]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Polynomial {
        let k = self.index(i, j);
        &mut self.entries[k]
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).eval(x))
    }

    pub fn derivative(&self, k: usize) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e.derivative(k)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e.scale(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() }
    }

    /// Entrywise product with a scalar polynomial.
    pub fn mul_scalar(&self, p: &Polynomial) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e * p).collect() }
    }

    /// `S(H) = -Σ_{ij} ∂_i ∂_j H_ij` as a polynomial.
    pub fn abreu(&self) -> Polynomial {
        let mut s = Polynomial::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                s = &s - &self.entry(i, j).derivative(i).derivative(j);
            }
        }
        s
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A field known only through point evaluations; derivatives are taken by
/// Richardson-extrapolated central differences.
#[derive(Clone)]
pub struct SampledField {
    polytope: LabelledPolytope,
    eval: Evaluator,
}

impl SampledField {
    pub fn new(polytope: &LabelledPolytope, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { polytope: polytope.clone(), eval: Arc::new(eval) }
    }

    /// Smallest FD step, `h₀ = 1e-4 · diameter`; points within `10 h₀` of `∂P` are rejected.
    pub fn step(&self) -> f64 {
        1e-4 * self.polytope.diameter()
    }

    /// Step used at `x`: `depth / 100` clamped to `[h₀, 10 h₀]`. Larger steps
    /// away from the boundary keep the `ε/h²` rounding of second differences
    /// well below the `h⁴` Richardson truncation.
    pub fn step_at(&self, x: &[f64]) -> Result<f64> {
        let h0 = self.step();
        let depth = self.polytope.depth(x);
        if depth <= 10.0 * h0 {
            return Err(Error::StepUnderflow(x.to_vec()));
        }
        Ok((depth / 100.0).clamp(h0, 10.0 * h0))
    }

    fn symmetric(&self, x: &[f64]) -> DMatrix<f64> {
        let m = (self.eval)(x);
        (&m + m.transpose()) * 0.5
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let h = self.step_at(x)?;
        let n = x.len();
        let central = |k: usize, h: f64| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            (self.symmetric(&xp) - self.symmetric(&xm)) / (2.0 * h)
        };
        Ok((0..n).map(|k| (central(k, h / 2.0) * 4.0 - central(k, h)) / 3.0).collect())
    }

    fn abreu(&self, x: &[f64]) -> Result<f64> {
        let h = self.step_at(x)?;
        let n = x.len();
        let at = |dx: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(k, d) in dx {
                y[k] += d;
            }
            self.symmetric(&y)
        };
        let second = |h: f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (at(&[(i, h)])[(i, i)] - 2.0 * at(&[])[(i, i)] + at(&[(i, -h)])[(i, i)]) / (h * h);
                for j in 0..n {
                    if i != j {
                        let d = at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                            + at(&[(i, -h), (j, -h)]);
                        acc += d[(i, j)] / (4.0 * h * h);
                    }
                }
            }
            -acc
        };
        Ok((4.0 * second(h / 2.0) - second(h)) / 3.0)
    }
}

impl fmt::Debug for SampledField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledField").field("dim", &self.polytope.dim()).finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    ClosedFormGuillemin,
    PolynomialSym2,
    Sampled,
    Combination,
}

/// A `Sym²`-valued function on the closed polytope.
#[derive(Clone, Debug)]
pub enum MatrixField {
    /// `(Hess u)^{-1}` for a symplectic potential `u`.
    InverseHessian(SymplecticPotential),
    Polynomial(PolySym2),
    Sampled(SampledField),
    /// `Σ c_k H_k`.
    Combination(Vec<(f64, MatrixField)>),
}

impl MatrixField {
    pub fn inverse_hessian(u: &SymplecticPotential) -> Self {
        MatrixField::InverseHessian(u.clone())
    }

    pub fn guillemin(p: &LabelledPolytope) -> Self {
        MatrixField::InverseHessian(SymplecticPotential::guillemin(p))
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            MatrixField::InverseHessian(u) if u.smooth_part().is_zero() => FieldKind::ClosedFormGuillemin,
            MatrixField::InverseHessian(_) | MatrixField::Combination(_) => FieldKind::Combination,
            MatrixField::Polynomial(_) => FieldKind::PolynomialSym2,
            MatrixField::Sampled(_) => FieldKind::Sampled,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixField::InverseHessian(u) => u.dim(),
            MatrixField::Polynomial(p) => p.dim(),
            MatrixField::Sampled(s) => s.polytope.dim(),
            MatrixField::Combination(parts) => parts[0].1.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            MatrixField::InverseHessian(u) => inverse_hessian_at(u, x),
            MatrixField::Polynomial(p) => Ok(p.eval(x)),
            MatrixField::Sampled(s) => Ok(s.symmetric(x)),
            MatrixField::Combination(parts) => {
                let mut acc = DMatrix::zeros(self.dim(), self.dim());
                for (c, f) in parts {
                    acc += f.eval(x)? * *c;
                }
                Ok(acc)
            }
        }
    }

    /// `∂_k H` for each `k`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        match self {
            MatrixField::InverseHessian(u) => inverse_hessian_gradient(u, x),
            MatrixField::Polynomial(p) => Ok((0..p.dim()).map(|k| p.derivative(k).eval(x)).collect()),
            MatrixField::Sampled(s) => s.gradient(x),
            MatrixField::Combination(parts) => {
                let n = self.dim();
                let mut acc = vec![DMatrix::zeros(n, n); n];
                for (c, f) in parts {
                    for (a, g) in acc.iter_mut().zip(f.gradient(x)?) {
                        *a += g * *c;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `S(H)(x) = -Σ_{ij} ∂_i ∂_j H_ij`; exact except for sampled fields.
    pub fn abreu(&self, x: &[f64]) -> Result<f64> {
        match self {
            MatrixField::InverseHessian(u) => inverse_hessian_abreu(u, x),
            MatrixField::Polynomial(p) => {
                let mut acc = 0.0;
                for i in 0..p.dim() {
                    for j in 0..p.dim() {
                        acc -= p.entry(i, j).derivative(i).derivative(j).eval(x);
                    }
                }
                Ok(acc)
            }
            MatrixField::Sampled(s) => s.abreu(x),
            MatrixField::Combination(parts) => {
                let mut acc = 0.0;
                for (c, f) in parts {
                    acc += c * f.abreu(x)?;
                }
                Ok(acc)
            }
        }
    }

    /// The same field seen only through point evaluations.
    pub fn as_sampled(&self, p: &LabelledPolytope) -> SampledField {
        let me = self.clone();
        SampledField::new(p, move |x| me.eval(x).unwrap_or_else(|_| DMatrix::from_element(x.len(), x.len(), f64::NAN)))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn invert_spd(g: DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    match g.clone().cholesky() {
        Some(c) => Ok(symmetrize(c.inverse())),
        None => Err(Error::SingularHessian {
            point: x.to_vec(),
            min_eig: g.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min),
        }),
    }
}

/// Interior: `(Hess u)^{-1}`. On a face with active labels `A`: the limit
/// `Z (Zᵀ R Z)^{-1} Zᵀ`, `Z` spanning the complement of `{n_s : s ∈ A}` and
/// `R` the finite part of the Hessian.
fn inverse_hessian_at(u: &SymplecticPotential, x: &[f64]) -> Result<DMatrix<f64>> {
    let p = u.polytope();
    let tol = p.tol_geom();
    let ls = p.slacks(x);
    if let Some(s) = ls.iter().position(|&l| l < -tol) {
        return Err(Error::BoundaryEvaluation { facet: s, value: ls[s] });
    }
    let active: Vec<usize> = (0..ls.len()).filter(|&s| ls[s] <= tol).collect();
    if active.is_empty() {
        return invert_spd(u.hessian_with(x, &ls, None), x);
    }
    let n = p.dim();
    let normals: Vec<Vec<f64>> = active.iter().map(|&s| p.label(s).to_vec()).collect();
    let z = orthogonal_complement(&normals, n);
    if z.ncols() == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let r = u.hessian_with(x, &ls, Some(&active));
    let reduced = invert_spd(z.transpose() * &r * &z, x)?;
    Ok(symmetrize(&z * reduced * z.transpose()))
}

/// Exact `-H ∂_k G H` in the interior; at points within `1e-6 · diam` of the
/// boundary, Richardson extrapolation of interior values taken at
/// `h, h/2, h/4, h/8` toward the barycenter (`h = 1e-3 · diam`).
fn inverse_hessian_gradient(u: &SymplecticPotential, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let p = u.polytope();
    let diam = p.diameter();
    let exact = |y: &[f64]| -> Result<Vec<DMatrix<f64>>> {
        let h = inverse_hessian_at(u, y)?;
        Ok(u.hessian_derivatives(y)?.iter().map(|dg| -(&h * dg * &h)).collect())
    };
    if p.depth(x) > 1e-6 * diam {
        return exact(x);
    }
    if p.slacks(x).iter().any(|&l| l < -p.tol_geom()) {
        return Err(Error::BoundaryEvaluation { facet: 0, value: p.depth(x) });
    }
    let b = p.barycenter();
    let d = sub(&b, x);
    let len = norm(&d);
    let step = |t: f64| -> Vec<f64> { x.iter().zip(&d).map(|(xi, di)| xi + t * di / len).collect() };
    // Richardson table on h / 2^i, eliminating the h, h², h³ terms
    let h = 1e-3 * diam;
    let mut table: Vec<Vec<Vec<DMatrix<f64>>>> = Vec::new();
    for i in 0..RICHARDSON_LEVELS {
        let mut row = vec![exact(&step(h / f64::powi(2.0, i as i32)))?];
        for j in 1..=i {
            let c = f64::powi(2.0, j as i32);
            let prev = &table[i - 1];
            let next = (0..p.dim()).map(|k| (&row[j - 1][k] * c - &prev[j - 1][k]) / (c - 1.0)).collect();
            row.push(next);
        }
        table.push(row);
    }
    Ok(table.pop().unwrap().pop().unwrap())
}

const RICHARDSON_LEVELS: usize = 4;

fn inverse_hessian_abreu(u: &SymplecticPotential, x: &[f64]) -> Result<f64> {
    let g = u.hessian(x)?;
    let h = invert_spd(g, x)?;
    let dg = u.hessian_derivatives(x)?;
    let ddg = u.hessian_second_derivatives(x)?;
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = &dg[i] * &h * &dg[j];
            let b = &dg[j] * &h * &dg[i];
            let d2 = &h * (a + b - &ddg[i][j]) * &h;
            s -= d2[(i, j)];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::shapes::*;

    fn poly1(coeffs: &[f64]) -> Polynomial {
        Polynomial::from_terms(1, coeffs.iter().enumerate().map(|(k, &c)| (c, vec![k as u32])))
    }

    #[test]
    fn inverse_hessian_examples() {
        let i = interval(0.0, 1.0, 1.0, 1.0);
        let h = MatrixField::guillemin(&i);
        assert_eq!(h.kind(), FieldKind::ClosedFormGuillemin);
        for x in [0.1, 0.5, 0.8] {
            assert!((h.eval(&[x]).unwrap()[(0, 0)] - 2.0 * x * (1.0 - x)).abs() < 1e-14);
        }
        assert_eq!(h.eval(&[0.0]).unwrap()[(0, 0)], 0.0);
        assert_eq!(h.eval(&[1.0]).unwrap()[(0, 0)], 0.0);

        let sq = MatrixField::guillemin(&unit_square());
        let m = sq.eval(&[0.3, 0.6]).unwrap();
        assert!((m[(0, 0)] - 0.42).abs() < 1e-14 && (m[(1, 1)] - 0.48).abs() < 1e-14 && m[(0, 1)].abs() < 1e-15);
        let edge = sq.eval(&[0.0, 0.25]).unwrap();
        assert!(edge[(0, 0)].abs() < 1e-15 && (edge[(1, 1)] - 0.375).abs() < 1e-14);

        let i12 = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 2.0));
        for x in [0.2, 0.7] {
            assert!((i12.eval(&[x]).unwrap()[(0, 0)] - 2.0 * x * (1.0 - x) / (1.0 + x)).abs() < 1e-14);
        }
    }

    #[test]
    fn abreu_examples() {
        let h = MatrixField::Polynomial(PolySym2::diagonal(vec![poly1(&[0.0, 2.0, -2.0])]));
        assert!((h.abreu(&[0.3]).unwrap() - 4.0).abs() < 1e-14);
        let cubic = MatrixField::Polynomial(PolySym2::diagonal(vec![poly1(&[0.0, 2.0, -3.0, 1.0])]));
        assert!((cubic.abreu(&[0.25]).unwrap() - (6.0 - 1.5)).abs() < 1e-14);
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let one = Polynomial::constant(2, 1.0);
        let d = PolySym2::diagonal(vec![(&x * &(&one - &x)).scale(2.0), (&y * &(&one - &y)).scale(2.0)]);
        assert!((MatrixField::Polynomial(d).abreu(&[0.2, 0.9]).unwrap() - 8.0).abs() < 1e-14);

        // closed-form Guillemin fields
        assert!((MatrixField::guillemin(&unit_square()).abreu(&[0.2, 0.7]).unwrap() - 8.0).abs() < 1e-11);
        let i12 = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 2.0));
        // H = 2x(1-x)/(1+x), -H'' = 8/(1+x)^3
        for x in [0.1f64, 0.5, 0.9] {
            assert!((i12.abreu(&[x]).unwrap() - 8.0 / (1.0 + x).powi(3)).abs() < 1e-11);
        }
    }

    #[test]
    fn finite_differences_agree_with_symbolic() {
        let p = pentagon();
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let h = PolySym2::from_rows(vec![
            vec![&(&x * &x) * &y, &x.scale(0.3) + &y.pow(3)],
            vec![&x.scale(0.3) + &y.pow(3), &(&x * &y) + &x.pow(4)],
        ])
        .unwrap();
        let field = MatrixField::Polynomial(h);
        let sampled = MatrixField::Sampled(field.as_sampled(&p));
        for pt in [[0.3, 0.3], [0.5, 0.6], [0.2, 0.8], [0.7, 0.4]] {
            let exact = field.abreu(&pt).unwrap();
            let fd = sampled.abreu(&pt).unwrap();
            assert!((exact - fd).abs() < 1e-7, "{exact} vs {fd}");
            let ge = field.gradient(&pt).unwrap();
            let gf = sampled.gradient(&pt).unwrap();
            for k in 0..2 {
                assert!((&ge[k] - &gf[k]).norm() < 1e-7);
            }
        }
        assert!(matches!(sampled.abreu(&[1e-5, 0.5]), Err(Error::StepUnderflow(_))));
    }

    #[test]
    fn boundary_gradient_extrapolation() {
        // H = 2x(1-x): H'(0) = 2
        let h = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 1.0));
        assert!((h.gradient(&[0.0]).unwrap()[0][(0, 0)] - 2.0).abs() < 1e-9);
        // 2x(1-x)/(1+x): derivative at 1 is -1
        let h = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 2.0));
        assert!((h.gradient(&[1.0]).unwrap()[0][(0, 0)] + 1.0).abs() < 1e-8);
    }
}
