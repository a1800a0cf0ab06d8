use serde::{Deserialize, Serialize};

use super::field::{MatrixField, PolySym2};
use crate::error::{Error, Result};
use crate::extremal::{extremal_affine, AffineFunction};
use crate::polynomial::Polynomial;
use crate::polytope::shapes::interval;

/// The extremal metric on an interval with boundary labels `a_left`, `a_right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremal1d {
    pub alpha: f64,
    pub beta: f64,
    pub a_left: f64,
    pub a_right: f64,
    /// `H(x) = Σ_k coefficients[k] x^k` (cubic).
    pub coefficients: Vec<f64>,
    pub zeta: AffineFunction,
    /// `H > 0` on the open interval.
    pub positive: bool,
    /// `max |ζ - extremal_affine|` over the coefficients of the two affine functions.
    pub zeta_consistency: f64,
}

impl Extremal1d {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::from_terms(1, self.coefficients.iter().enumerate().map(|(k, &c)| (c, vec![k as u32])))
    }

    pub fn field(&self) -> MatrixField {
        MatrixField::Polynomial(PolySym2::diagonal(vec![self.polynomial()]))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// The unique cubic `H` with `H(α) = H(β) = 0`, `H'(α) = 2/a_left`,
/// `H'(β) = -2/a_right`, and `ζ = -H''`.
///
/// `H = (x - α)(β - x)(p + q x)` with `p + q α = 2/(a_left L)` and
/// `p + q β = 2/(a_right L)`, `L = β - α`; both values are positive, so the
/// linear factor and hence `H` are positive on `(α, β)`.
pub fn solve_extremal_1d(alpha: f64, beta: f64, a_left: f64, a_right: f64) -> Result<Extremal1d> {
    let finite = [alpha, beta, a_left, a_right].iter().all(|v| v.is_finite());
    if !finite || !(alpha < beta) || !(a_left > 0.0) || !(a_right > 0.0) {
        return Err(Error::InvalidInterval(alpha, beta));
    }
    let len = beta - alpha;
    let at_alpha = 2.0 / (a_left * len);
    let at_beta = 2.0 / (a_right * len);
    let q = (at_beta - at_alpha) / len;
    let p = at_alpha - q * alpha;
    // (x - α)(β - x) = -x² + (α + β) x - αβ
    let quad = [-alpha * beta, alpha + beta, -1.0];
    let mut coefficients = vec![0.0; 4];
    for (i, &c) in quad.iter().enumerate() {
        coefficients[i] += c * p;
        coefficients[i + 1] += c * q;
    }
    // -H'' for H = c0 + c1 x + c2 x² + c3 x³
    let zeta = AffineFunction::new(-2.0 * coefficients[2], vec![-6.0 * coefficients[3]]);
    let positive = at_alpha > 0.0 && at_beta > 0.0;
    assert!(positive, "the linear factor is positive at both endpoints by construction");

    let p = interval(alpha, beta, a_left, a_right);
    let reference = extremal_affine(&p, &p.boundary_measure())?;
    let zeta_consistency =
        (reference.constant - zeta.constant).abs().max((reference.gradient[0] - zeta.gradient[0]).abs());
    Ok(Extremal1d { alpha, beta, a_left, a_right, coefficients, zeta, positive, zeta_consistency })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let s = solve_extremal_1d(0.0, 1.0, 1.0, 1.0).unwrap();
        for (c, e) in s.coefficients.iter().zip([0.0, 2.0, -2.0, 0.0]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((s.zeta.constant - 4.0).abs() < 1e-12 && s.zeta.gradient[0].abs() < 1e-12);

        let s = solve_extremal_1d(0.0, 1.0, 1.0, 2.0).unwrap();
        for (c, e) in s.coefficients.iter().zip([0.0, 2.0, -3.0, 1.0]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((s.zeta.constant - 6.0).abs() < 1e-12 && (s.zeta.gradient[0] + 6.0).abs() < 1e-12);

        let s = solve_extremal_1d(0.0, 2.0, 1.0, 1.0).unwrap();
        for (c, e) in s.coefficients.iter().zip([0.0, 2.0, -1.0, 0.0]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((s.zeta.constant - 2.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_and_positive() {
        for (a, b, l, r) in [(0.0, 1.0, 1.0, 1.0), (-1.0, 3.0, 0.5, 4.0), (2.0, 2.5, 3.0, 0.2)] {
            let s = solve_extremal_1d(a, b, l, r).unwrap();
            assert!(s.zeta_consistency < 1e-12 * (1.0 + s.zeta.constant.abs()));
            for k in 1..10_000 {
                let x = a + (b - a) * k as f64 / 10_000.0;
                assert!(s.eval(x) > 0.0);
            }
            // boundary data
            let d = s.polynomial().derivative(0);
            assert!((d.eval(&[a]) - 2.0 / l).abs() < 1e-12 && (d.eval(&[b]) + 2.0 / r).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(solve_extremal_1d(1.0, 0.0, 1.0, 1.0), Err(Error::InvalidInterval(..))));
        assert!(matches!(solve_extremal_1d(0.0, 1.0, 0.0, 1.0), Err(Error::InvalidInterval(..))));
    }
}
