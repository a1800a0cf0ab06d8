use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;
use crate::polytope::LabelledPolytope;

/// `u = ½ Σ ℓ_s log ℓ_s + q` for a polynomial `q`.
#[derive(Clone, Debug)]
pub struct SymplecticPotential {
    polytope: LabelledPolytope,
    smooth: Polynomial,
    /// second partials of `q`, `smooth_hessian[i][j] = q_{,ij}`
    smooth_hessian: Vec<Vec<Polynomial>>,
}

impl SymplecticPotential {
    pub fn guillemin(p: &LabelledPolytope) -> Self {
        Self::with_smooth(p, Polynomial::zero(p.dim())).expect("zero polynomial has the right dimension")
    }

    pub fn with_smooth(p: &LabelledPolytope, smooth: Polynomial) -> Result<Self> {
        let n = p.dim();
        if smooth.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: smooth.dim() });
        }
        let grad: Vec<Polynomial> = (0..n).map(|i| smooth.derivative(i)).collect();
        let smooth_hessian = (0..n).map(|i| (0..n).map(|j| grad[i].derivative(j)).collect()).collect();
        Ok(Self { polytope: p.clone(), smooth, smooth_hessian })
    }

    pub fn polytope(&self) -> &LabelledPolytope {
        &self.polytope
    }

    pub fn smooth_part(&self) -> &Polynomial {
        &self.smooth
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    /// Value on the closed polytope (`0 log 0 = 0`).
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let tol = self.polytope.tol_geom();
        let mut acc = 0.0;
        for (s, l) in self.polytope.slacks(x).into_iter().enumerate() {
            if l < -tol {
                return Err(Error::BoundaryEvaluation { facet: s, value: l });
            }
            if l > 0.0 {
                acc += 0.5 * l * l.ln();
            }
        }
        Ok(acc + self.smooth.eval(x))
    }

    fn interior_slacks(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ls = self.polytope.slacks(x);
        match ls.iter().position(|&l| l <= 0.0) {
            Some(s) => Err(Error::BoundaryEvaluation { facet: s, value: ls[s] }),
            None => Ok(ls),
        }
    }

    /// `Hess u = ½ Σ n_s n_sᵀ / ℓ_s + Hess q` at an interior point.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let ls = self.interior_slacks(x)?;
        Ok(self.hessian_with(x, &ls, None))
    }

    /// Sum over facets not in `skip` plus `Hess q`; the finite part of the Hessian near a face.
    pub(crate) fn hessian_with(&self, x: &[f64], ls: &[f64], skip: Option<&[usize]>) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::from_fn(n, n, |i, j| self.smooth_hessian[i][j].eval(x));
        for (s, &l) in ls.iter().enumerate() {
            if skip.is_some_and(|k| k.contains(&s)) {
                continue;
            }
            let m = self.polytope.label(s);
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += 0.5 * m[i] * m[j] / l;
                }
            }
        }
        g
    }

    /// `∂_k Hess u` for each `k`.
    pub fn hessian_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let ls = self.interior_slacks(x)?;
        let n = self.dim();
        Ok((0..n)
            .map(|k| {
                let mut d = DMatrix::from_fn(n, n, |i, j| self.smooth_hessian[i][j].derivative(k).eval(x));
                for (s, &l) in ls.iter().enumerate() {
                    let m = self.polytope.label(s);
                    let c = -0.5 * m[k] / (l * l);
                    for i in 0..n {
                        for j in 0..n {
                            d[(i, j)] += c * m[i] * m[j];
                        }
                    }
                }
                d
            })
            .collect())
    }

    /// `∂_k ∂_l Hess u`, indexed `[k][l]`.
    pub fn hessian_second_derivatives(&self, x: &[f64]) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let ls = self.interior_slacks(x)?;
        let n = self.dim();
        Ok((0..n)
            .map(|k| {
                (0..n)
                    .map(|kk| {
                        let mut d = DMatrix::from_fn(n, n, |i, j| {
                            self.smooth_hessian[i][j].derivative(k).derivative(kk).eval(x)
                        });
                        for (s, &l) in ls.iter().enumerate() {
                            let m = self.polytope.label(s);
                            let c = m[k] * m[kk] / (l * l * l);
                            for i in 0..n {
                                for j in 0..n {
                                    d[(i, j)] += c * m[i] * m[j];
                                }
                            }
                        }
                        d
                    })
                    .collect()
            })
            .collect())
    }
}

/// Hessian of the Guillemin potential of `p` at an interior point.
pub fn guillemin_hessian(p: &LabelledPolytope, x: &[f64]) -> Result<DMatrix<f64>> {
    SymplecticPotential::guillemin(p).hessian(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::shapes::*;

    #[test]
    fn hessian_examples() {
        let h = guillemin_hessian(&interval(0.0, 1.0, 1.0, 1.0), &[0.5]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-15);
        let h = guillemin_hessian(&unit_square(), &[0.5, 0.5]).unwrap();
        assert!((h - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).norm() < 1e-15);
        let h = guillemin_hessian(&simplex(2), &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((h - DMatrix::from_row_slice(2, 2, &[3.0, 1.5, 1.5, 3.0])).norm() < 1e-14);
        assert!(matches!(
            guillemin_hessian(&unit_square(), &[0.0, 0.5]),
            Err(Error::BoundaryEvaluation { facet: 0, .. })
        ));
    }

    #[test]
    fn derivatives_match_differences() {
        let p = pentagon();
        let u =
            SymplecticPotential::with_smooth(&p, Polynomial::from_terms(2, vec![(0.3, vec![2, 1]), (0.1, vec![0, 4])]))
                .unwrap();
        let x = [0.3, 0.4];
        let h = 1e-5;
        let d = u.hessian_derivatives(&x).unwrap();
        let dd = u.hessian_second_derivatives(&x).unwrap();
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (u.hessian(&xp).unwrap() - u.hessian(&xm).unwrap()) / (2.0 * h);
            assert!((&fd - &d[k]).norm() < 1e-6);
            for l in 0..2 {
                let fd2 =
                    (&u.hessian_derivatives(&xp).unwrap()[l] - &u.hessian_derivatives(&xm).unwrap()[l]) / (2.0 * h);
                assert!((&fd2 - &dd[k][l]).norm() < 1e-4);
            }
        }
        assert!(u.value(&[0.0, 0.0]).unwrap().is_finite());
    }
}
