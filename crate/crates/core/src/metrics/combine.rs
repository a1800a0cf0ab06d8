use super::field::MatrixField;
use crate::error::{Error, Result};

/// `(1 - t) H₀ + t H₁` for `t ∈ [0, 1]`; the endpoints return the inputs unchanged.
pub fn convex_combine(h0: &MatrixField, h1: &MatrixField, t: f64) -> Result<MatrixField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("convex weight {t} is outside [0, 1]")));
    }
    Ok(if t == 0.0 {
        h0.clone()
    } else if t == 1.0 {
        h1.clone()
    } else {
        MatrixField::Combination(vec![(1.0 - t, h0.clone()), (t, h1.clone())])
    })
}

/// `a H₁ + b H₂`; for `H_k` solving the boundary problem for `σ_k`, this solves it for `a σ₁ + b σ₂`.
pub fn linearity_in_sigma(h1: &MatrixField, h2: &MatrixField, a: f64, b: f64) -> MatrixField {
    MatrixField::Combination(vec![(a, h1.clone()), (b, h2.clone())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::extremal_affine;
    use crate::metrics::certify::{check_boundary, check_positivity};
    use crate::metrics::solve1d::solve_extremal_1d;
    use crate::polytope::shapes::*;

    #[test]
    fn endpoints_are_exact() {
        let h0 = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 1.0));
        let h1 = MatrixField::guillemin(&interval(0.0, 1.0, 1.0, 2.0));
        let c = convex_combine(&h0, &h1, 0.0).unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(c.eval(&[x]).unwrap(), h0.eval(&[x]).unwrap());
        }
        assert!(convex_combine(&h0, &h1, 1.5).is_err());
    }

    #[test]
    fn midpoint_of_two_labellings() {
        let p0 = interval(0.0, 1.0, 1.0, 1.0);
        let p1 = interval(0.0, 1.0, 1.0, 2.0);
        let h = convex_combine(&MatrixField::guillemin(&p0), &MatrixField::guillemin(&p1), 0.5).unwrap();
        let sigma = p0.boundary_measure().combine(0.5, &p1.boundary_measure(), 0.5);
        assert_eq!(sigma.weights, vec![1.0, 0.75]);
        assert!(check_boundary(&h, &p0, &sigma).pass);
        assert!(!check_boundary(&h, &p0, &p0.boundary_measure()).pass);
        assert!(check_positivity(&h, &p0, 50).pass);
    }

    #[test]
    fn doubling_a_solution() {
        let s = solve_extremal_1d(0.0, 1.0, 1.0, 2.0).unwrap();
        let p = interval(0.0, 1.0, 1.0, 2.0);
        let h = linearity_in_sigma(&s.field(), &s.field(), 2.0, 0.0);
        let sigma2 = p.boundary_measure().combine(2.0, &p.boundary_measure(), 0.0);
        let zeta2 = extremal_affine(&p, &sigma2).unwrap();
        for x in [0.1, 0.4, 0.8] {
            assert!((h.abreu(&[x]).unwrap() - 2.0 * s.field().abreu(&[x]).unwrap()).abs() < 1e-12);
            assert!((h.abreu(&[x]).unwrap() - zeta2.eval(&[x])).abs() < 1e-11);
        }
        assert!(check_boundary(&h, &p, &sigma2).pass);
    }
}
